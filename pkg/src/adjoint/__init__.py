# Adjoint transport and the Λ-scheme
