import numpy as np
import pytest

from normlap.wavelets import (
    DETAIL_TAGS,
    FILTERS,
    Volume,
    WaveletCoeffs,
    dataset_threshold,
    dwt3,
    hard_threshold,
    idwt3,
    max_levels,
    pairwise_sparse_l1,
    read_volume,
    select_threshold,
    sparse_l1_distance,
    wemd_coeffs,
    wemd_distance,
    wemd_vector,
    wemd_weight,
    write_volume,
)


def random_volume(rng, dims):
    return Volume(voxels=rng.standard_normal(dims))


class TestFilters:
    def test_filters_orthonormal(self):
        for name, lo in FILTERS.items():
            h = np.array(lo)
            assert h.sum() == pytest.approx(np.sqrt(2), abs=1e-15)
            assert (h * h).sum() == pytest.approx(1.0, abs=1e-15)
            for shift in range(2, len(h), 2):
                assert (h[:-shift] * h[shift:]).sum() == pytest.approx(0.0, abs=1e-15)


class TestTransform:
    def test_perfect_reconstruction_bulk(self):
        rng = np.random.default_rng(0)
        cases = [(8, 8, 8), (16, 16, 16), (32, 32, 32)]
        done = 0
        while done < 100:
            dims = cases[done % len(cases)]
            wavelet = ("haar", "sym3")[done % 2]
            levels = 1 + done % max_levels(dims)
            x = rng.standard_normal(dims)
            rec = idwt3(dwt3(Volume(voxels=x), wavelet, levels))
            assert np.abs(rec.voxels - x).max() <= 1e-10 * np.abs(x).max()
            done += 1

    def test_reconstruction_with_padding(self):
        rng = np.random.default_rng(1)
        x = rng.standard_normal((12, 20, 9))
        co = dwt3(Volume(voxels=x), "sym3", 3)
        assert co.padded_dims == (16, 24, 16)
        assert co.source_dims == (12, 20, 9)
        rec = idwt3(co)
        assert rec.dims == (12, 20, 9)
        assert np.abs(rec.voxels - x).max() <= 1e-10 * np.abs(x).max()

    def test_constant_volume_haar(self):
        c = 2.5
        co = dwt3(Volume(voxels=np.full((8, 8, 8), c)), "haar", 1)
        assert np.allclose(co.approx, c * 2**1.5, atol=1e-12)
        for tag in DETAIL_TAGS:
            assert np.abs(co.details[0][tag]).max() < 1e-12

    def test_zero_volume(self):
        co = dwt3(Volume(voxels=np.zeros((8, 8, 8))), "sym3", 2)
        assert np.abs(co.flatten()).max() == 0.0

    def test_single_unit_approx_coefficient(self):
        ap = np.zeros((1, 1, 1))
        ap[0, 0, 0] = 1.0
        co = WaveletCoeffs(
            wavelet="haar",
            levels=1,
            source_dims=(2, 2, 2),
            padded_dims=(2, 2, 2),
            voxel_size=1.0,
            approx=ap,
            details=({tag: np.zeros((1, 1, 1)) for tag in DETAIL_TAGS},),
        )
        rec = idwt3(co)
        assert np.allclose(rec.voxels, 2**-1.5, atol=1e-15)

    def test_linearity(self):
        rng = np.random.default_rng(2)
        x = rng.standard_normal((16, 16, 16))
        y = rng.standard_normal((16, 16, 16))
        a, b = 2.0, -3.5
        lhs = dwt3(Volume(voxels=a * x + b * y), "sym3", 2).flatten()
        rhs = a * dwt3(Volume(voxels=x), "sym3", 2).flatten() + b * dwt3(
            Volume(voxels=y), "sym3", 2
        ).flatten()
        scale = np.abs(lhs).max()
        assert np.abs(lhs - rhs).max() <= 1e-12 * scale

    def test_levels_too_deep(self):
        with pytest.raises(ValueError, match="max feasible levels is 3"):
            dwt3(Volume(voxels=np.zeros((8, 8, 8))), "haar", 4)

    def test_unknown_wavelet(self):
        with pytest.raises(ValueError, match="unknown wavelet"):
            dwt3(Volume(voxels=np.zeros((8, 8, 8))), "db7", 1)

    def test_idwt_rejects_weighted(self):
        co = wemd_weight(dwt3(Volume(voxels=np.ones((8, 8, 8))), "haar", 1))
        with pytest.raises(ValueError, match="weighted"):
            idwt3(co)


class TestWeighting:
    def test_scale_indices_coarsest_origin(self):
        co = dwt3(Volume(voxels=np.zeros((32, 32, 32))), "haar", 5)
        assert co.scale_index("LLL") == 0
        assert co.scale_index("HHH", step=5) == 0  # coarsest detail step
        assert co.scale_index("HHH", step=1) == 4  # finest detail step

    def test_scale_indices_finest_origin(self):
        co = dwt3(Volume(voxels=np.zeros((32, 32, 32))), "haar", 5)
        w = wemd_weight(co, scale_origin="finest")
        assert w.scale_index("LLL") == 5
        assert w.scale_index("HHH", step=1) == 0

    def test_weight_values(self):
        # an entry at scale s is multiplied by 2^(-5s/2)
        rng = np.random.default_rng(3)
        co = dwt3(Volume(voxels=rng.standard_normal((64, 64, 64))), "haar", 6)
        w = wemd_weight(co)
        for (tag, step, s, arr), (_, _, _, warr) in zip(co.bands(), w.bands()):
            factor = 2.0 ** (-2.5 * s)
            assert np.allclose(warr, arr * factor, rtol=1e-15)
        # spot values: s=0 -> 1, s=2 -> 2^-5, s=6 would be 2^-15
        assert 2.0 ** (-2.5 * 0) == 1.0
        assert 2.0 ** (-2.5 * 2) == pytest.approx(0.03125)
        assert 2.0 ** (-2.5 * 6) == pytest.approx(3.0517578125e-05)

    def test_double_weighting_rejected(self):
        co = wemd_weight(dwt3(Volume(voxels=np.ones((8, 8, 8))), "haar", 1))
        with pytest.raises(ValueError, match="already weighted"):
            wemd_weight(co)


class TestThresholding:
    def weighted(self, rng, dims=(16, 16, 16)):
        return wemd_weight(dwt3(random_volume(rng, dims), "sym3", 3))

    def test_hard_threshold_examples(self):
        rng = np.random.default_rng(4)
        co = self.weighted(rng)
        flat = co.flatten()
        sp = hard_threshold(co, 0.0)
        assert sp.nnz == np.count_nonzero(flat)
        assert np.allclose(np.sort(np.abs(sp.values)), np.sort(np.abs(flat[flat != 0.0])))
        t = np.median(np.abs(flat))
        sp = hard_threshold(co, t)
        kept = flat[np.abs(flat) > t]
        assert sp.nnz == kept.size
        assert np.all(np.abs(sp.values) > t)

    def test_hard_threshold_strict_inequality(self):
        ap = np.array([0.5, -2.0, 1.0]).reshape(1, 1, 3)
        co = WaveletCoeffs(
            wavelet="haar",
            levels=1,
            source_dims=(1, 1, 3),
            padded_dims=(1, 1, 3),
            voxel_size=1.0,
            approx=ap,
            details=({tag: np.zeros((0, 0, 0)) for tag in DETAIL_TAGS},),
            weighted=True,
        )
        sp = hard_threshold(co, 1.0)
        assert sp.values.tolist() == [-2.0]

    def test_select_threshold_examples(self):
        base = dict(
            wavelet="haar",
            levels=1,
            source_dims=(1, 1, 4),
            padded_dims=(1, 1, 4),
            voxel_size=1.0,
            details=({tag: np.zeros((0, 0, 0)) for tag in DETAIL_TAGS},),
            weighted=True,
        )
        co = WaveletCoeffs(approx=np.array([4.0, 3.0, 2.0, 1.0]).reshape(1, 1, 4), **base)
        t = select_threshold(co, 0.7)
        assert 2.0 <= t < 3.0
        assert select_threshold(co, 1.0) == 0.0
        single = dict(base, source_dims=(1, 1, 1), padded_dims=(1, 1, 1))
        co = WaveletCoeffs(approx=np.array([5.0]).reshape(1, 1, 1), **single)
        t = select_threshold(co, 0.5)
        assert 0.0 <= t < 5.0

    def test_select_threshold_requires_weighted(self):
        co = dwt3(Volume(voxels=np.ones((8, 8, 8))), "haar", 1)
        with pytest.raises(ValueError, match="weighted"):
            select_threshold(co, 0.9)

    def test_select_threshold_mass_guarantee(self):
        rng = np.random.default_rng(5)
        for frac in (0.5, 0.9, 0.99):
            co = self.weighted(rng)
            t = select_threshold(co, frac)
            sp = hard_threshold(co, t)
            assert sp.l1_mass() >= frac * np.abs(co.flatten()).sum()

    def test_dataset_threshold_pools_mass(self):
        rng = np.random.default_rng(6)
        cos = [self.weighted(rng) for _ in range(4)]
        t = dataset_threshold(cos, 0.9)
        kept = sum(hard_threshold(c, t).l1_mass() for c in cos)
        total = sum(np.abs(c.flatten()).sum() for c in cos)
        assert kept >= 0.9 * total


class TestSparseDistance:
    def test_trivial_cases(self):
        rng = np.random.default_rng(7)
        co = wemd_weight(dwt3(random_volume(rng, (8, 8, 8)), "sym3", 2))
        a = hard_threshold(co, 0.0)
        assert sparse_l1_distance(a, a) == 0.0

    def test_disjoint_supports(self):
        meta = ("haar", 1, (2, 2, 2), True, 2.5, "coarsest")
        from normlap.wavelets import SparseCoeffs

        a = SparseCoeffs(indices=np.array([1]), values=np.array([2.0]), meta=meta)
        b = SparseCoeffs(indices=np.array([3]), values=np.array([-3.0]), meta=meta)
        assert sparse_l1_distance(a, b) == 5.0

    def test_matches_dense_oracle(self):
        rng = np.random.default_rng(8)
        ca = wemd_weight(dwt3(random_volume(rng, (16, 16, 16)), "sym3", 3))
        cb = wemd_weight(dwt3(random_volume(rng, (16, 16, 16)), "sym3", 3))
        dense = np.abs(ca.flatten() - cb.flatten()).sum()
        sparse = sparse_l1_distance(hard_threshold(ca, 0.0), hard_threshold(cb, 0.0))
        assert sparse == pytest.approx(dense, rel=1e-12)

    def test_metadata_mismatch(self):
        rng = np.random.default_rng(9)
        a = hard_threshold(wemd_weight(dwt3(random_volume(rng, (8, 8, 8)), "sym3", 2)), 0.0)
        b = hard_threshold(wemd_weight(dwt3(random_volume(rng, (8, 8, 8)), "haar", 2)), 0.0)
        with pytest.raises(ValueError, match="metadata"):
            sparse_l1_distance(a, b)

    def test_pairwise_matrix_matches_pairs(self):
        rng = np.random.default_rng(10)
        cos = [wemd_weight(dwt3(random_volume(rng, (8, 8, 8)), "sym3", 2)) for _ in range(5)]
        t = dataset_threshold(cos, 0.8)
        sps = [hard_threshold(c, t) for c in cos]
        dim = cos[0].flatten().size
        D = pairwise_sparse_l1(sps, dim)
        for i in range(5):
            for j in range(5):
                assert D[i, j] == pytest.approx(
                    sparse_l1_distance(sps[i], sps[j]), rel=1e-12, abs=1e-12
                )

    def test_pairwise_matrix_handles_empty_rows(self):
        from normlap.wavelets import SparseCoeffs

        meta = ("haar", 1, (2, 2, 2), True, 2.5, "coarsest")
        items = [
            SparseCoeffs(indices=np.array([0, 2]), values=np.array([1.0, -1.0]), meta=meta),
            SparseCoeffs(indices=np.array([], dtype=np.int64), values=np.array([]), meta=meta),
            SparseCoeffs(indices=np.array([2]), values=np.array([2.0]), meta=meta),
        ]
        D = pairwise_sparse_l1(items, 8)
        assert D[0, 1] == pytest.approx(2.0)
        assert D[1, 2] == pytest.approx(2.0)
        assert D[0, 2] == pytest.approx(4.0)


class TestWemdNormProperties:
    def test_norm_axioms_on_volume_differences(self):
        rng = np.random.default_rng(11)
        dims = (8, 8, 8)
        for _ in range(200):
            x = rng.standard_normal(dims)
            y = rng.standard_normal(dims)
            z = rng.standard_normal(dims)
            wx = wemd_vector(Volume(voxels=x), extra_levels=0)
            wy = wemd_vector(Volume(voxels=y), extra_levels=0)
            wz = wemd_vector(Volume(voxels=z), extra_levels=0)
            dxy = np.abs(wx - wy).sum()
            dyz = np.abs(wy - wz).sum()
            dxz = np.abs(wx - wz).sum()
            assert dxz <= dxy + dyz + 1e-10 * max(dxy + dyz, 1.0)
            lam = 2.5
            wlx = wemd_vector(Volume(voxels=lam * (x - y)), extra_levels=0)
            assert np.abs(wlx).sum() == pytest.approx(lam * dxy, rel=1e-10)

    def test_translation_sensitivity(self):
        """A one-voxel shift of a blob is closer in WEMD than an
        eight-voxel shift (transport-like monotonicity)."""
        rng = np.random.default_rng(12)
        dims = (32, 32, 32)
        xs = np.arange(32)
        for _ in range(20):
            c = rng.uniform(10, 14, size=3)
            sig = rng.uniform(1.2, 2.2)
            gs = [np.exp(-((xs - ci) ** 2) / (2 * sig**2)) for ci in c]
            blob = np.einsum("i,j,k->ijk", *gs)
            v0 = Volume(voxels=blob)
            v1 = Volume(voxels=np.roll(blob, 1, axis=0))
            v8 = Volume(voxels=np.roll(blob, 8, axis=0))
            assert wemd_distance(v0, v1) < wemd_distance(v0, v8)

    def test_superscale_padding_metadata(self):
        co = wemd_coeffs(Volume(voxels=np.zeros((32, 32, 32))))
        assert co.padded_dims == (64, 64, 64)
        assert co.levels == 6
        co = wemd_coeffs(Volume(voxels=np.zeros((32, 32, 32))), extra_levels=0)
        assert co.padded_dims == (32, 32, 32)


class TestVolumeIO:
    def test_round_trip_bit_exact(self, tmp_path):
        rng = np.random.default_rng(13)
        vol = Volume(voxels=rng.standard_normal((5, 7, 3)).astype(np.float32).astype(float),
                     voxel_size=1.5)
        p1 = tmp_path / "a.f32"
        p2 = tmp_path / "b.f32"
        write_volume(p1, vol)
        loaded = read_volume(p1)
        assert loaded.dims == (5, 7, 3)
        assert loaded.voxel_size == 1.5
        write_volume(p2, loaded)
        assert p1.read_bytes() == p2.read_bytes()

    def test_header_is_single_json_line_within_64_bytes(self, tmp_path):
        vol = Volume(voxels=np.zeros((47, 47, 107)), voxel_size=6.0)
        path = tmp_path / "v.f32"
        write_volume(path, vol)
        with open(path, "rb") as fh:
            line = fh.readline(80)
        assert line.endswith(b"\n")
        assert len(line) <= 65
        import json

        meta = json.loads(line)
        assert (meta["nx"], meta["ny"], meta["nz"]) == (47, 47, 107)
        assert meta["dtype"] == "f32"

    def test_truncated_payload_rejected(self, tmp_path):
        vol = Volume(voxels=np.zeros((4, 4, 4)))
        path = tmp_path / "v.f32"
        write_volume(path, vol)
        data = path.read_bytes()
        path.write_bytes(data[:-8])
        with pytest.raises(ValueError, match="truncated"):
            read_volume(path)

    def test_volume_validation(self):
        with pytest.raises(ValueError, match="3-d"):
            Volume(voxels=np.zeros((4, 4)))
        with pytest.raises(ValueError, match="finite"):
            Volume(voxels=np.full((2, 2, 2), np.nan))
        with pytest.raises(ValueError, match="voxel_size"):
            Volume(voxels=np.zeros((2, 2, 2)), voxel_size=0.0)
