# Command-line commands and file formats