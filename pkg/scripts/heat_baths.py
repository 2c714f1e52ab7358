"""Qutrit coupled to two finite heat baths: energy is conserved, entropy grows."""
import numpy as np

from qgflow import CoupledState, IntegratorConfig, simulate
from qgflow.lindblad import eigenpair_basis, spectral_decompose
from qgflow.scenarios import HeatBathParams, build_heat_baths


def main():
    H = np.diag([0.0, 1.0, 2.5]).astype(complex)
    sd = spectral_decompose(H)
    pairs = [eigenpair_basis(sd, 1.0)[0], eigenpair_basis(sd, 1.5)[0]]
    system = build_heat_baths(H, HeatBathParams([2.0, 3.0], pairs, [1.0, 0.5], exchange=0.2))
    rho0 = 0.7 * np.full((3, 3), 1 / 3, dtype=complex) + 0.1 * np.eye(3)
    traj = simulate(system, CoupledState(rho0, [0.8, 1.6]), IntegratorConfig(dt=1e-3, t_end=10.0, output_stride=1000))
    print(" t      E              S          theta_1  theta_2")
    for t, e, s, z in zip(traj.times, traj.energy, traj.entropy, traj.zs):
        print(f"{t:5.1f}  {e:.12f}  {s:.8f}  {z[0]:.5f}  {z[1]:.5f}")
    print(f"energy drift {np.ptp(traj.energy):.2e}")


if __name__ == "__main__":
    main()
