# Cocycle lab - validation module
