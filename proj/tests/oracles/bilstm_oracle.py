"""Logits and d(total log-prob)/d(weights) of a tiny selector, via torch.nn.LSTM.

Weights and inputs follow closed-form patterns the C++ test regenerates:
  weight[i]  = 0.4 * sin(0.37 * i + 0.2)
  input[t,j] = cos(1.3 * t + 0.4 * j + 0.1) * (1 + 0.2 * j)
Flat weight order: proj_w [H,D], proj_b [H], then per direction (forward,
backward) wx [4H,H], wh [4H,H], b [4H], then head_w [2H], head_b [1].
Writes golden/bilstm_small.txt.
"""
import math
import pathlib

import torch

torch.set_default_dtype(torch.float64)
D, H, N = 4, 3, 5
PICKS = [3, 0]

sizes = [H * D, H] + [4 * H * H, 4 * H * H, 4 * H] * 2 + [2 * H, 1]
total = sum(sizes)
flat = torch.tensor([0.4 * math.sin(0.37 * i + 0.2) for i in range(total)], requires_grad=True)
x = torch.tensor([[math.cos(1.3 * t + 0.4 * j + 0.1) * (1 + 0.2 * j) for j in range(D)] for t in range(N)])

parts = torch.split(flat, sizes)
proj_w, proj_b = parts[0].view(H, D), parts[1]
fwd = (parts[2].view(4 * H, H), parts[3].view(4 * H, H), parts[4])
bwd = (parts[5].view(4 * H, H), parts[6].view(4 * H, H), parts[7])
head_w, head_b = parts[8], parts[9]

lstm = torch.nn.LSTM(H, H, bidirectional=True, batch_first=True)
for p in lstm.parameters():
    p.requires_grad_(False)


def functional_lstm(inp):
    params = {
        "weight_ih_l0": fwd[0], "weight_hh_l0": fwd[1], "bias_ih_l0": fwd[2], "bias_hh_l0": torch.zeros(4 * H),
        "weight_ih_l0_reverse": bwd[0], "weight_hh_l0_reverse": bwd[1], "bias_ih_l0_reverse": bwd[2],
        "bias_hh_l0_reverse": torch.zeros(4 * H),
    }
    return torch.func.functional_call(lstm, params, (inp,))[0]


proj = x @ proj_w.T + proj_b
hs = functional_lstm(proj.unsqueeze(0))[0]  # [N, 2H], forward states then backward states
logits = hs @ head_w + head_b

mask = torch.zeros(N, dtype=torch.bool)
logp = torch.zeros(())
for a in PICKS:
    masked = logits.masked_fill(mask, float("-inf"))
    logp = logp + logits[a] - torch.logsumexp(masked, 0)
    mask = mask.clone()
    mask[a] = True
logp.backward()

lines = [f"# D={D} H={H} N={N} picks={PICKS}", "# logits"]
lines += [repr(float(v)) for v in logits.detach()]
lines += ["# total_logp", repr(float(logp.detach())), "# gradient"]
lines += [repr(float(v)) for v in flat.grad]
out = pathlib.Path(__file__).resolve().parent.parent / "golden" / "bilstm_small.txt"
out.write_text("\n".join(lines) + "\n")
print(f"{total} weights, total_logp {float(logp.detach()):.17g}")
