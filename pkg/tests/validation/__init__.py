# Cocycle lab - Validation module tests
