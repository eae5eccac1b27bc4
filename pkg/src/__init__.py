# Product-integral lab
