# Cocycle lab - Processing module tests
