"""Relax a qubit under the Bloch generator and fit the T1/T2 times."""
import argparse

import numpy as np

from qgflow import CoupledState, IntegratorConfig, simulate
from qgflow.scenarios import LindbladFlow, bloch_generator, bloch_state, bloch_vector


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--gamma", type=float, default=1.0)
    ap.add_argument("--delta", type=float, default=1.0)
    ap.add_argument("--beta", type=float, default=1.0)
    ap.add_argument("--t-end", type=float, default=3.0)
    args = ap.parse_args()

    H, L = bloch_generator(args.gamma, args.delta, beta=args.beta)
    flow = LindbladFlow(H, L, beta=args.beta)
    a_eq = bloch_vector(flow.ts.rho_hat.rho)
    traj = simulate(flow, CoupledState(bloch_state([0.7, 0.0, -0.5])),
                    IntegratorConfig(dt=1e-3, t_end=args.t_end, output_stride=20))
    a = np.array([bloch_vector(r) for r in traj.rhos])
    rate2 = -np.polyfit(traj.times, np.log(np.hypot(a[:, 0], a[:, 1])), 1)[0]
    rate1 = -np.polyfit(traj.times, np.log(np.abs(a[:, 2] - a_eq[2])), 1)[0]
    print(f"T1 fitted {1 / rate1:.6f}  expected {1 / (2 * args.gamma):.6f}")
    print(f"T2 fitted {1 / rate2:.6f}  expected {1 / (args.gamma + 2 * args.delta):.6f}")
    print(f"equilibrium Bloch vector {a_eq.round(6)}; final {a[-1].round(6)}")


if __name__ == "__main__":
    main()
