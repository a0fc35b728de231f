# momdwa-quantum-control Services
