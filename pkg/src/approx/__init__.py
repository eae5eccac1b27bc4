# Approximating sequences and confinement
