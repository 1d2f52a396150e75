"""Feedforward controllers and the self-teaching update.

Every agent carries two small fully connected networks over the same sensory
input: an action network whose output picks the motor command, and a
reinforcement network whose output is used as a moving target that the action
network is pulled toward during the agent's lifetime. Both are plain
input -> hidden -> output sigmoid networks without bias terms.

All arithmetic here is scalar and runs in a fixed order so that results are
reproducible bit-for-bit, and so the compiled engine can replay the exact
same float operations.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np


class Action(enum.IntEnum):
    """Motor commands, in output-unit order."""

    TURN_LEFT = 0
    FORWARD = 1
    TURN_RIGHT = 2


class SensoryInput(NamedTuple):
    """Binary food-direction sensors: at most one of the three is set."""

    left: int
    front: int
    right: int


@dataclass(frozen=True)
class LayerSpec:
    """Layer sizes for one network (and for both halves of a controller)."""

    n_input: int = 3
    n_hidden: int = 10
    n_output: int = 3

    def validate(self) -> None:
        for name in ("n_input", "n_hidden", "n_output"):
            v = getattr(self, name)
            if not isinstance(v, int) or v < 1:
                raise ValueError(f"{name} must be a positive integer, got {v!r}")


@dataclass
class NetworkWeights:
    """Weight matrices of one network.

    w_ih has shape (n_hidden, n_input), w_ho has shape (n_output, n_hidden);
    both are float64 arrays.
    """

    w_ih: np.ndarray
    w_ho: np.ndarray

    def copy(self) -> "NetworkWeights":
        return NetworkWeights(self.w_ih.copy(), self.w_ho.copy())


@dataclass
class SelfTaughtController:
    """An action network plus the reinforcement network that teaches it.

    Only the action half is ever modified by learning; the reinforcement half
    stays fixed for the controller's whole lifetime.
    """

    action: NetworkWeights
    reinforcement: NetworkWeights
    learning_rate: float = 0.01


def init_weights(spec: LayerSpec, rng: np.random.Generator) -> NetworkWeights:
    """Draw a fresh weight set with every entry N(0, 1).

    Draw order is fixed: the input->hidden matrix row by row, then the
    hidden->output matrix row by row, so a seed pins the entire weight set.
    """
    w_ih = rng.standard_normal((spec.n_hidden, spec.n_input))
    w_ho = rng.standard_normal((spec.n_output, spec.n_hidden))
    return NetworkWeights(w_ih, w_ho)


def _sigmoid(z: float) -> float:
    return 1.0 / (1.0 + math.exp(-z))


def _forward_lists(w_ih, w_ho, x):
    # Shared by forward() and self_teach(); returns (hidden, output) lists.
    h = []
    for row in w_ih:
        z = 0.0
        for wji, xi in zip(row, x):
            z += wji * xi
        h.append(_sigmoid(z))
    out = []
    for row in w_ho:
        z = 0.0
        for wkj, hj in zip(row, h):
            z += wkj * hj
        out.append(_sigmoid(z))
    return h, out


def forward(weights: NetworkWeights, x: Sequence[float]) -> list[float]:
    """One forward pass; returns the output activations.

    Inputs may be any length-n_input sequence of reals (the sensors are 0/1).
    Outputs all lie strictly inside (0, 1) because of the sigmoid squashing.
    """
    _, out = _forward_lists(weights.w_ih.tolist(), weights.w_ho.tolist(), x)
    return out


def choose_action(outputs: Sequence[float]) -> Action:
    """Index of the largest output as an Action; lowest index wins ties."""
    best = 0
    for k in range(1, len(outputs)):
        if outputs[k] > outputs[best]:
            best = k
    return Action(best)


def self_teach(controller: SelfTaughtController, x: Sequence[float]) -> None:
    """One in-place gradient step pulling action outputs toward the target.

    The reinforcement network's output r for the current input is treated as
    a constant target, and the action weights take one step of gradient
    descent on L = 1/2 * sum_k (a_k - r_k)^2. Both layers are updated from
    gradients evaluated at the pre-update weights.
    """
    lr = controller.learning_rate
    wih = controller.action.w_ih.tolist()
    who = controller.action.w_ho.tolist()
    h, a = _forward_lists(wih, who, x)
    _, r = _forward_lists(
        controller.reinforcement.w_ih.tolist(),
        controller.reinforcement.w_ho.tolist(),
        x,
    )
    n_hidden = len(h)
    n_output = len(a)

    dout = [(a[k] - r[k]) * a[k] * (1.0 - a[k]) for k in range(n_output)]
    # hidden deltas must read the pre-update output weights
    dhid = []
    for j in range(n_hidden):
        err = 0.0
        for k in range(n_output):
            err += dout[k] * who[k][j]
        dhid.append(err * h[j] * (1.0 - h[j]))

    for k in range(n_output):
        for j in range(n_hidden):
            who[k][j] -= lr * (dout[k] * h[j])
    for j in range(n_hidden):
        for i in range(len(x)):
            wih[j][i] -= lr * (dhid[j] * x[i])

    controller.action.w_ih[:] = wih
    controller.action.w_ho[:] = who


def _pair_loss(action: NetworkWeights, reinforcement: NetworkWeights, x) -> float:
    a = forward(action, x)
    r = forward(reinforcement, x)
    loss = 0.0
    for k in range(len(a)):
        d = a[k] - r[k]
        loss += d * d
    return 0.5 * loss


def gradient_check(
    spec: LayerSpec | None = None,
    n_trials: int = 100,
    eps: float = 1e-5,
    seed: int = 0,
) -> float:
    """Check the self-teach update against central finite differences.

    For each trial a random controller and a random binary input are drawn,
    the analytic weight deltas are recovered from one self_teach step, and
    every weight is perturbed by +-eps to estimate the loss gradient
    numerically. The numeric side uses only forward passes, so it shares no
    code with the backprop step. Returns the worst relative error seen.
    """
    if spec is None:
        spec = LayerSpec()
    rng = np.random.default_rng(seed)
    lr = 0.01
    worst = 0.0
    for _ in range(n_trials):
        action = init_weights(spec, rng)
        reinforcement = init_weights(spec, rng)
        x = [float(v) for v in rng.integers(0, 2, spec.n_input)]

        before = action.copy()
        ctl = SelfTaughtController(action, reinforcement, lr)
        self_teach(ctl, x)
        grad_ih = (before.w_ih - ctl.action.w_ih) / lr
        grad_ho = (before.w_ho - ctl.action.w_ho) / lr

        for grad, mat in ((grad_ih, before.w_ih), (grad_ho, before.w_ho)):
            it = np.nditer(mat, flags=["multi_index"])
            for _v in it:
                idx = it.multi_index
                saved = mat[idx]
                probe = NetworkWeights(before.w_ih, before.w_ho)
                mat[idx] = saved + eps
                loss_hi = _pair_loss(probe, reinforcement, x)
                mat[idx] = saved - eps
                loss_lo = _pair_loss(probe, reinforcement, x)
                mat[idx] = saved
                fd = (loss_hi - loss_lo) / (2.0 * eps)
                rel = abs(grad[idx] - fd) / max(abs(fd), 1e-6)
                if rel > worst:
                    worst = rel
    return worst
