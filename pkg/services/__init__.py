# Services package initialization
# Numerical services of the gaussbesov toolkit
