# Cocycle lab - data module
