# # Polygonal meshes of the unit square
#
# Builds the two mesh families used throughout: centroidal-Voronoi-style
# polygon meshes (random seeds relaxed by Lloyd iterations, clipped to the
# square) and structured right-triangle meshes.  Shows the quality report,
# the JSON round trip, and the Lloyd energy decay.

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from sgvem import generate_cvt_mesh, generate_structured_triangles, load_mesh, mesh_quality, save_mesh

OUT = os.path.join(os.path.dirname(__file__), "output")
os.makedirs(OUT, exist_ok=True)

# ## Lloyd relaxation drives the quantization energy down monotonically

mesh, energies = generate_cvt_mesh(64, seed=7, lloyd_iters=120, return_energy_trace=True)
print(f"CVT mesh: {mesh.n_cells} cells, {mesh.n_vertices} vertices, {mesh.n_edges} edges")
print(f"energy: {energies[0]:.5f} -> {energies[-1]:.5f} over {len(energies) - 1} iterations")
print(mesh_quality(mesh))

# ## Round trip through the JSON mesh format

path = os.path.join(OUT, "cvt64.json")
save_mesh(mesh, path)
again = load_mesh(path)
assert np.array_equal(again.vertices, mesh.vertices)
print(f"saved and re-loaded {path} bit-exactly")

# ## Triangles for cross-checking the polygonal results

tri = generate_structured_triangles(8)
print(f"triangle mesh: {tri.n_cells} cells, max h = {tri.max_diameter():.4f}")

# ## Plot both meshes side by side

fig, axes = plt.subplots(1, 3, figsize=(13, 4))
for ax, m, title in ((axes[0], mesh, "CVT, 64 cells"), (axes[1], tri, "triangles, n=8")):
    for cell in m.cells:
        loop = np.append(cell, cell[0])
        ax.plot(m.vertices[loop, 0], m.vertices[loop, 1], "k-", lw=0.7)
    ax.set_aspect("equal")
    ax.set_title(title)
axes[2].semilogy(energies - energies[-1] + 1e-16)
axes[2].set_xlabel("Lloyd iteration")
axes[2].set_title("energy above the relaxed state")
fig.tight_layout()
fig.savefig(os.path.join(OUT, "meshes.png"), dpi=130)
print(f"wrote {os.path.join(OUT, 'meshes.png')}")
