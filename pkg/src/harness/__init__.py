# Command-line harness
