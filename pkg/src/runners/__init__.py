# momdwa-quantum-control Runners
