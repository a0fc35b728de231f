# momdwa-quantum-control Utilities
