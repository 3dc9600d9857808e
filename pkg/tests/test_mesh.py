"""Surface extraction, smoothing, and STL export.

The STL byte-level checks parse emitted files with a minimal struct-based
reader written here, independent of the mesh module's serializer.
"""

import struct

import numpy as np
import pytest

from voxturbine.genome import Genome, random_genome
from voxturbine.mesh import (
    STL_HEADER_BYTES,
    STL_RECORD_BYTES,
    TriangleMesh,
    laplacian_smooth,
    stl_filename,
    voxels_to_mesh,
    write_stl,
    write_stl_ascii,
    write_stl_binary,
)
from voxturbine.morphology import VOXEL_SIZE_MM, VoxelGrid, build_phenotype

REFERENCE_ALLELES = (2, 2, 3, 4, 5, 8, 13, 20, 34, 40)


def single_voxel_grid() -> VoxelGrid:
    occ = np.zeros((3, 3, 3), dtype=bool)
    occ[1, 1, 1] = True
    return VoxelGrid(occ)


def read_stl_binary(blob: bytes) -> list[tuple[tuple, tuple, int]]:
    """Minimal independent binary STL reader: (normal, 9 vertex floats, attr)."""
    assert len(blob) >= STL_HEADER_BYTES + 4
    (count,) = struct.unpack_from("<I", blob, STL_HEADER_BYTES)
    records = []
    offset = STL_HEADER_BYTES + 4
    for _ in range(count):
        fields = struct.unpack_from("<12fH", blob, offset)
        records.append((fields[0:3], fields[3:12], fields[12]))
        offset += STL_RECORD_BYTES
    assert offset == len(blob)
    return records


def edge_degrees(mesh: TriangleMesh) -> np.ndarray:
    _, counts = mesh.edges()
    return counts


class TestMeshType:
    def test_shape_validation(self):
        with pytest.raises(ValueError):
            TriangleMesh(np.zeros((4, 2)), np.zeros((1, 3), dtype=np.int64))
        with pytest.raises(ValueError):
            TriangleMesh(np.zeros((4, 3)), np.zeros((1, 4), dtype=np.int64))

    def test_index_range_validation(self):
        with pytest.raises(ValueError):
            TriangleMesh(np.zeros((3, 3)), np.asarray([[0, 1, 3]]))
        with pytest.raises(ValueError):
            TriangleMesh(np.zeros((3, 3)), np.asarray([[0, 1, -1]]))

    def test_arrays_read_only(self):
        mesh = voxels_to_mesh(single_voxel_grid())
        with pytest.raises(ValueError):
            mesh.vertices[0, 0] = 9.0
        with pytest.raises(ValueError):
            mesh.triangles[0, 0] = 0


class TestSingleVoxel:
    def test_counts(self):
        mesh = voxels_to_mesh(single_voxel_grid())
        assert mesh.vertex_count == 8
        assert mesh.triangle_count == 12

    def test_signed_volume_exact_cube(self):
        mesh = voxels_to_mesh(single_voxel_grid())
        assert mesh.signed_volume() == pytest.approx(VOXEL_SIZE_MM**3, rel=1e-12)

    def test_closed_every_edge_degree_two(self):
        mesh = voxels_to_mesh(single_voxel_grid())
        assert np.all(edge_degrees(mesh) == 2)

    def test_vertices_on_scaled_corners(self):
        mesh = voxels_to_mesh(single_voxel_grid())
        expected = {
            (VOXEL_SIZE_MM * (1 + dx), VOXEL_SIZE_MM * (1 + dy), VOXEL_SIZE_MM * (1 + dz))
            for dx in (0, 1)
            for dy in (0, 1)
            for dz in (0, 1)
        }
        got = {tuple(v) for v in np.round(mesh.vertices, 12)}
        assert got == {tuple(np.round(e, 12)) for e in expected}

    def test_normals_unit_and_axis_aligned(self):
        mesh = voxels_to_mesh(single_voxel_grid())
        normals = mesh.triangle_normals()
        assert np.allclose(np.linalg.norm(normals, axis=1), 1.0)
        # Cube faces are axis aligned: exactly one nonzero component each.
        assert np.all(np.sum(np.abs(normals) > 1e-12, axis=1) == 1)


class TestExtraction:
    def test_two_face_adjacent_voxels(self):
        occ = np.zeros((4, 3, 3), dtype=bool)
        occ[1, 1, 1] = occ[2, 1, 1] = True
        mesh = voxels_to_mesh(VoxelGrid(occ))
        assert mesh.vertex_count == 12
        assert mesh.triangle_count == 20
        assert mesh.signed_volume() == pytest.approx(2 * VOXEL_SIZE_MM**3, rel=1e-12)

    def test_empty_grid_refused(self):
        with pytest.raises(ValueError):
            voxels_to_mesh(VoxelGrid(np.zeros((3, 3, 3), dtype=bool)))

    def test_edge_contact_stays_closed(self):
        # Two voxels sharing only an edge: naive face culling would put four
        # triangles on that edge; corner splitting keeps every edge at 2.
        occ = np.zeros((2, 2, 1), dtype=bool)
        occ[0, 0, 0] = occ[1, 1, 0] = True
        mesh = voxels_to_mesh(VoxelGrid(occ))
        assert np.all(edge_degrees(mesh) == 2)
        assert mesh.signed_volume() == pytest.approx(2 * VOXEL_SIZE_MM**3, rel=1e-12)
        # The split duplicates contact-corner coordinates instead of welding.
        coords = {tuple(v) for v in np.round(mesh.vertices, 12)}
        assert len(coords) < mesh.vertex_count

    def test_corner_contact_stays_closed(self):
        occ = np.zeros((2, 2, 2), dtype=bool)
        occ[0, 0, 0] = occ[1, 1, 1] = True
        mesh = voxels_to_mesh(VoxelGrid(occ))
        assert np.all(edge_degrees(mesh) == 2)
        assert mesh.triangle_count == 24

    def test_reference_phenotype_volume_and_welding(self):
        grid = build_phenotype(Genome(REFERENCE_ALLELES))
        mesh = voxels_to_mesh(grid)
        expected = grid.enabled_count * VOXEL_SIZE_MM**3
        assert mesh.signed_volume() == pytest.approx(expected, rel=1e-9)
        assert np.all(edge_degrees(mesh) == 2)
        # z-uniform phenotypes have no diagonal contacts: fully welded.
        coords = {tuple(v) for v in np.round(mesh.vertices, 12)}
        assert len(coords) == mesh.vertex_count

    @pytest.mark.parametrize("z_mode", [False, True])
    def test_random_phenotypes_closed_and_exact(self, z_mode):
        rng = np.random.default_rng(202)
        for _ in range(5):
            grid = build_phenotype(random_genome(rng, z_mode))
            mesh = voxels_to_mesh(grid)
            assert np.all(edge_degrees(mesh) == 2)
            expected = grid.enabled_count * VOXEL_SIZE_MM**3
            assert mesh.signed_volume() == pytest.approx(expected, rel=1e-9)


class TestLaplacianSmooth:
    def test_zero_steps_identity(self):
        mesh = voxels_to_mesh(single_voxel_grid())
        out = laplacian_smooth(mesh, 0)
        assert out is not mesh
        assert np.array_equal(out.vertices, mesh.vertices)
        assert np.array_equal(out.triangles, mesh.triangles)

    def test_negative_steps_rejected(self):
        mesh = voxels_to_mesh(single_voxel_grid())
        with pytest.raises(ValueError):
            laplacian_smooth(mesh, -1)

    def test_counts_invariant(self):
        mesh = voxels_to_mesh(build_phenotype(Genome(REFERENCE_ALLELES)))
        out = laplacian_smooth(mesh, 5)
        assert out.vertex_count == mesh.vertex_count
        assert out.triangle_count == mesh.triangle_count

    def test_cube_corner_one_step_hand_average(self):
        # Hand oracle for the cube's (0,0,0)-corner 1-ring under the fixed
        # face-diagonal split: three cube edges plus three face diagonals,
        # so the mean of its six neighbors is (0.15, 0.15, 0.15).
        mesh = voxels_to_mesh(single_voxel_grid())
        shift = VOXEL_SIZE_MM  # grid places the voxel at index 1
        corner = np.asarray([shift, shift, shift])
        (idx,) = np.where(np.all(np.isclose(mesh.vertices, corner), axis=1))[0]
        out = laplacian_smooth(mesh, 1)
        expected = corner + np.asarray([0.15, 0.15, 0.15])
        assert np.allclose(out.vertices[idx], expected)

    def test_cube_one_step_strictly_inside(self):
        mesh = voxels_to_mesh(single_voxel_grid())
        out = laplacian_smooth(mesh, 1)
        assert np.all(out.vertices.min(axis=0) > mesh.vertices.min(axis=0))
        assert np.all(out.vertices.max(axis=0) < mesh.vertices.max(axis=0))

    def test_bounding_box_volume_non_increasing(self):
        mesh = voxels_to_mesh(build_phenotype(Genome(REFERENCE_ALLELES)))
        volumes = []
        for steps in (0, 1, 2, 4, 8):
            out = laplacian_smooth(mesh, steps)
            span = out.vertices.max(axis=0) - out.vertices.min(axis=0)
            volumes.append(float(np.prod(span)))
        assert all(b <= a + 1e-12 for a, b in zip(volumes, volumes[1:]))


class TestStlExport:
    def test_single_voxel_binary_is_684_bytes(self):
        blob = write_stl_binary(voxels_to_mesh(single_voxel_grid()))
        assert len(blob) == STL_HEADER_BYTES + 4 + 12 * STL_RECORD_BYTES == 684

    def test_binary_round_trip_triangle_set(self):
        mesh = voxels_to_mesh(single_voxel_grid())
        records = read_stl_binary(write_stl_binary(mesh))
        assert len(records) == mesh.triangle_count
        assert all(attr == 0 for _, _, attr in records)

        def triangle_key(nine: tuple) -> tuple:
            points = [tuple(nine[k : k + 3]) for k in (0, 3, 6)]
            return tuple(sorted(points))

        emitted = sorted(triangle_key(r[1]) for r in records)
        expected = sorted(
            triangle_key(tuple(np.float32(mesh.vertices[t].ravel())))
            for t in mesh.triangles
        )
        assert emitted == expected

    def test_binary_count_field(self):
        mesh = voxels_to_mesh(build_phenotype(Genome(REFERENCE_ALLELES)))
        blob = write_stl_binary(mesh)
        (count,) = struct.unpack_from("<I", blob, STL_HEADER_BYTES)
        assert count == mesh.triangle_count
        assert len(blob) == STL_HEADER_BYTES + 4 + count * STL_RECORD_BYTES

    def test_binary_normals_match_winding(self):
        mesh = voxels_to_mesh(single_voxel_grid())
        records = read_stl_binary(write_stl_binary(mesh))
        expected = np.float32(mesh.triangle_normals())
        got = np.asarray([r[0] for r in records], dtype=np.float32)
        assert np.array_equal(got, expected)

    def test_ascii_structure(self):
        mesh = voxels_to_mesh(single_voxel_grid())
        text = write_stl_ascii(mesh, name="probe").decode("ascii")
        lines = text.splitlines()
        assert lines[0] == "solid probe"
        assert lines[-1] == "endsolid probe"
        assert sum(1 for line in lines if line.strip().startswith("facet normal")) == 12
        assert sum(1 for line in lines if line.strip().startswith("vertex")) == 36

    def test_write_stl_dispatch(self):
        mesh = voxels_to_mesh(single_voxel_grid())
        assert write_stl(mesh, binary=True) == write_stl_binary(mesh)
        assert write_stl(mesh, binary=False) == write_stl_ascii(mesh)

    def test_filenames(self):
        assert stl_filename("abc123") == "abc123.stl"
        assert stl_filename("abc123", smooth_steps=50) == "abc123-s50.stl"
        assert stl_filename("abc123", smooth_steps=0) == "abc123.stl"
