# baselines: LSTM surprisal segmentation, single-segment VAE behavioral cloning
