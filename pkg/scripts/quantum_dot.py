"""Quantum dot exchanging electrons with a reservoir; prints the free energy decay."""
import numpy as np

from qgflow import IntegratorConfig, simulate
from qgflow.scenarios import QuantumDotParams, build_quantum_dot, quantum_dot_state


def main():
    params = QuantumDotParams(eps1=0.0, eps2=1.0, beta_star=1.0, kappa_hat=1.0, w_f=1.0, w_b=2.0)
    system = build_quantum_dot(params)
    rho0 = np.array([[0.2, 0.3], [0.3, 0.8]], dtype=complex)
    traj = simulate(system, quantum_dot_state(rho0, 1.5, 0.5), IntegratorConfig(dt=1e-3, t_end=10.0, output_stride=1000))
    print(" t      F            c_f      c_b      rho_11")
    for t, f, z, r in zip(traj.times, traj.free_energy, traj.zs, traj.rhos):
        print(f"{t:5.1f}  {f:.9f}  {z[0]:.5f}  {z[1]:.5f}  {r[0, 0].real:.5f}")


if __name__ == "__main__":
    main()
