"""Train the MDHP-LSTM classifier on a small separable toy set.

    python demos/04_toy_classifier.py [epochs]
"""

import sys

from mdhp.lstm import ModelConfig, TrainConfig, evaluate, train
from mdhp.pipeline import toy_dataset

epochs = int(sys.argv[1]) if len(sys.argv) > 1 else 30
train_set = toy_dataset(40, dims=3, seed=1)
val_set = toy_dataset(40, dims=3, seed=2)
cfg = TrainConfig(max_epoch=epochs, learning_rate=5e-4, model=ModelConfig(dims=3))
res = train(train_set, cfg, val_set)
for row in res.trace[:: max(1, epochs // 10)]:
    print(f"epoch {row['epoch']:3d}  loss {row['train_loss']:.4f}  val acc {row['val_acc']:.3f}")
m = evaluate(res.model, val_set)
print({k: round(m[k], 3) for k in ("accuracy", "precision", "recall", "f1", "auc")})
