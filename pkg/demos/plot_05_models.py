"""
Sequence models and their gradients
===================================

Build the standard and channel-wise LSTM fusion models, confirm the
hand-written backward pass against finite differences, then fit one on a
toy problem.
"""

import numpy as np

from vitalforge.models.fusion import fusion_loss_grad, init_sequence_model
from vitalforge.models.gradcheck import check_gradient
from vitalforge.models.train import ModelData, TrainConfig, predict, train
from vitalforge.metrics import auc_roc

rng = np.random.default_rng(0)
seq = rng.normal(size=(6, 5, 3))
wf = rng.normal(size=(6, 13))
y = np.array([1, 0, 1, 0, 0, 1], float)

for kind in ("lstm", "channelwise"):
    p = init_sequence_model(0, kind, 3, 13, hidden=4)
    _, g = fusion_loss_grad(p, seq, wf, y)
    err = check_gradient(lambda q: fusion_loss_grad(q, seq, wf, y)[0], p, g)
    print(f"{kind:12s} max relative gradient error {err:.2e}")

###############################################################################
# A toy task where only the waveform inputs carry signal.

n = 200
y = (rng.random(n) < 0.3).astype(float)
wf = rng.normal(size=(n, 13))
wf[:, 0] += 2.0 * y
data = ModelData(rng.normal(size=(n, 8, 3)), rng.normal(size=(n, 18)), y, wf)
tr, va = data.take(np.arange(150)), data.take(np.arange(150, n))
cfg = TrainConfig(epochs=40, hidden=8, learning_rate=0.1)
for fusion in ("none", "waveform"):
    params, hist = train("lstm", fusion, tr, va, cfg)
    print(f"fusion={fusion:8s} validation AUC-ROC {auc_roc(predict(params, va), va.y):.3f} after {len(hist)} epochs")
