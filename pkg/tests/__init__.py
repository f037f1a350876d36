# Test modules