# Cocycle lab - analysis module
