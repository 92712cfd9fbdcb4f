# models: config, encoders, segmentation primitives, CompILE, surprisal LSTM, checkpoints
