# Lie contexts, seminorms, curves and shared reports
