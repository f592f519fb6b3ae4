# Cocycle lab - processing module
