# χ composition and the continuity pipeline
