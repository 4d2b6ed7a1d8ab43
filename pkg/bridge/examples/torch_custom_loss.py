#!/usr/bin/env python3
"""Register the fused loss as a torch autograd node and descend on raw tensors.

The forward call crosses into the engine once and brings back the scalar
together with both gradient arrays; backward just scales the cached arrays by
the incoming cotangent. No network is involved, the two maps themselves are
the parameters.
"""

import numpy as np
import torch

from topokp_bridge import identity_u, py_loss


class DetectorLoss(torch.autograd.Function):
    @staticmethod
    def forward(ctx, map1, map2, u, alpha):
        loss, g1, g2, _ = py_loss(
            map1.detach().cpu().numpy(), map2.detach().cpu().numpy(), u, alpha
        )
        ctx.save_for_backward(torch.from_numpy(g1), torch.from_numpy(g2))
        return map1.new_tensor(loss)

    @staticmethod
    def backward(ctx, grad_out):
        g1, g2 = ctx.saved_tensors
        return grad_out * g1, grad_out * g2, None, None


def main() -> None:
    torch.manual_seed(0)
    h = w = 24
    alpha = 10.0
    map1 = torch.rand(h, w, dtype=torch.float64, requires_grad=True)
    map2 = torch.rand(h, w, dtype=torch.float64, requires_grad=True)
    u = identity_u((h, w))
    opt = torch.optim.SGD([map1, map2], lr=0.01)

    for step in range(25):
        opt.zero_grad()
        loss = DetectorLoss.apply(map1, map2, u, alpha)
        loss.backward()
        opt.step()
        with torch.no_grad():
            map1.clamp_(0.0, 1.0)
            map2.clamp_(0.0, 1.0)
        if step % 5 == 0 or step == 24:
            n_gen = len(py_loss(map1.detach().numpy(), map2.detach().numpy(), u, alpha)[3])
            print(f"step {step:3d}  loss {loss.item():+.6f}  generators {n_gen}")

    # the cotangent scaling really is honored: doubling the upstream gradient
    # doubles what lands on the leaves
    map1.grad = None
    map2.grad = None
    (2.0 * DetectorLoss.apply(map1, map2, u, alpha)).backward()
    doubled = map1.grad.clone()
    map1.grad = None
    map2.grad = None
    DetectorLoss.apply(map1, map2, u, alpha).backward()
    assert torch.allclose(doubled, 2.0 * map1.grad)
    print("cotangent scaling check passed")


if __name__ == "__main__":
    main()
