"""Adam with bias correction and a step-decay learning-rate schedule."""

import numpy as np


class StepDecay:
    """Multiplies the learning rate by ``factor`` at each milestone epoch."""

    def __init__(self, milestones=(), factor=0.1):
        self.milestones = tuple(sorted(milestones))
        self.factor = factor

    def multiplier(self, epoch):
        hits = sum(1 for m in self.milestones if epoch >= m)
        return self.factor ** hits


class Adam:
    def __init__(self, params, lr=1e-4, beta1=0.9, beta2=0.999, eps=1e-8,
                 schedule=None):
        self.params = list(params)
        self.base_lr = lr
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.schedule = schedule or StepDecay()
        self.t = 0
        self.m = [np.zeros_like(p.data) for p in self.params]
        self.v = [np.zeros_like(p.data) for p in self.params]

    def set_epoch(self, epoch):
        self.lr = self.base_lr * self.schedule.multiplier(epoch)

    def zero_grad(self):
        for p in self.params:
            p.zero_grad()

    def step(self):
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        bc1 = 1.0 - b1 ** self.t
        bc2 = 1.0 - b2 ** self.t
        for p, m, v in zip(self.params, self.m, self.v):
            g = p.grad
            m += (1 - b1) * (g - m)
            v += (1 - b2) * (g * g - v)
            mhat = m / bc1
            vhat = v / bc2
            p.data -= (self.lr * mhat / (np.sqrt(vhat) + self.eps)).astype(p.data.dtype)
