"""Central-finite-difference verification of parameter gradients."""

from dataclasses import dataclass, field

import numpy as np


@dataclass
class GradCheckEntry:
    name: str
    max_rel_error: float
    checked: int


@dataclass
class GradCheckReport:
    entries: list = field(default_factory=list)

    @property
    def max_rel_error(self):
        return max((e.max_rel_error for e in self.entries), default=0.0)

    def passed(self, tolerance):
        return self.max_rel_error < tolerance

    def summary(self):
        lines = [f"{e.name}: max rel err {e.max_rel_error:.3e} ({e.checked} entries)"
                 for e in self.entries]
        lines.append(f"overall max rel err {self.max_rel_error:.3e}")
        return "\n".join(lines)


def _rel_error(a, n):
    scale = max(abs(a), abs(n))
    if scale < 1e-6:
        return abs(a - n)
    return abs(a - n) / scale


def grad_check(params, loss_closure, step=1e-5):
    """Compare analytic parameter gradients against central differences.

    ``loss_closure()`` must run a deterministic forward+backward, accumulate
    gradients into each param's ``.grad`` (from zero) and return the scalar
    loss. Every parameter entry is perturbed; use f64 params and small models.
    """
    for p in params:
        p.zero_grad()
    loss_closure()
    analytic = {id(p): p.grad.copy() for p in params}

    report = GradCheckReport()
    for p in params:
        flat = p.data.reshape(-1)
        aflat = analytic[id(p)].reshape(-1)
        worst = 0.0
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            for q in params:
                q.zero_grad()
            lp = loss_closure()
            flat[i] = orig - step
            for q in params:
                q.zero_grad()
            lm = loss_closure()
            flat[i] = orig
            numeric = (lp - lm) / (2 * step)
            worst = max(worst, _rel_error(aflat[i], numeric))
        report.entries.append(GradCheckEntry(p.name, worst, flat.size))
    # restore analytic grads so callers see a consistent state
    for p in params:
        p.zero_grad()
    loss_closure()
    return report
