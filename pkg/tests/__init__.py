# Smooth Entropy Tests
