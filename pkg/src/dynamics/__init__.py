# Cocycle lab - dynamics (subshifts) module
