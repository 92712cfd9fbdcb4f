"""CompILE imitation package: segmentation auto-encoder for demonstration trajectories.

This package is NOT the main entry point; run main.py in the repository root.

Package Components:
- envs: grid world and reacher environments with scripted demonstrators
- data: JSONL demonstration datasets, replay validation, padded batches
- models: CompILE model, surprisal baseline network, checkpoints
- training: priors, ELBO objective, optimisation loop
- inference: discrete segmentation, reconstruction, online execution
- baselines: LSTM surprisal and VAE behavioral cloning
- evaluation: F1 / accuracy metrics and report writers
- plotting: loss curve and metric charts
"""

__version__ = "1.0.1"
