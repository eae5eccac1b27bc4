# Check suites
