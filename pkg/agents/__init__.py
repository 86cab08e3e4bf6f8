# agents: compile/run pipeline, verifier and bench, autotuner
