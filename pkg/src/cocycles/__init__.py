# Cocycle lab - cocycles module
