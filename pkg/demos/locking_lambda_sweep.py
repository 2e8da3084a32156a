# # Locking-free behavior for nearly incompressible material
#
# Sweeping the first Lame constant over four decades on a fixed 100-cell
# polygonal mesh: the relative errors barely move, because the projected
# divergence data of the discretization commute with interpolation.  The two
# analytic norms printed alongside certify the benchmark is the intended one
# independently of any mesh.

from sgvem import ModelParams, continuous_norms, example_solution, generate_cvt_mesh, solve_example

mesh = generate_cvt_mesh(100, seed=7)
print(f"mesh: {mesh.n_cells} cells, h = {mesh.max_diameter():.4f}\n")

header = f"{'lambda':>10} | {'lam*||div u||_H2':>16} | {'||f||_0':>10} | {'E_energy':>10} | {'E_max':>10}"
print(header)
print("-" * len(header))
for lam in (10.0, 1e2, 1e3, 1e4, 1e5):
    params = ModelParams(lam=lam, mu=1.0, iota=1e-5)
    norms = continuous_norms(example_solution("exam3", params), params, mesh)
    rec, _, _ = solve_example("exam3", params, mesh)
    print(f"{lam:10.0e} | {norms['lam_div_h2']:16.4e} | {norms['f_l2']:10.4e} "
          f"| {rec.e_pi:10.4e} | {rec.e_inf:10.4e}")
