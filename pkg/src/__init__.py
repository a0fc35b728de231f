# momdwa-quantum-control - Main Package
