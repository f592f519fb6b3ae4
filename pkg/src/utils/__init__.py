# Cocycle lab - utilities module
