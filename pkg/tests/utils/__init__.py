# Cocycle lab - Utilities module tests
