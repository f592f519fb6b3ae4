# Cocycle lab - Data module tests
