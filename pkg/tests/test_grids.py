"""Space-time grids, noise sampling, and field serialization."""

import numpy as np
import pytest

from bphzkit.grids import NOISE_LAWS, Grid, GridField, read_field, sample_noise, snorm, write_field


class TestGridGeometry:
    def test_shape_and_extents(self):
        g = Grid(2, 8, 16, T=2.0, L=4.0)
        assert g.shape == (8, 16, 16)
        assert g.dim == 3
        assert g.extents == (2.0, 4.0, 4.0)

    def test_cell_volume(self):
        g = Grid(2, 8, 16, T=2.0, L=4.0)
        assert g.cell_volume == pytest.approx((2.0 / 8) * (4.0 / 16) ** 2)

    def test_axis_coords_spacing(self):
        g = Grid(1, 8, 16, T=2.0, L=4.0)
        tc = g.axis_coords(0)
        xc = g.axis_coords(1)
        assert len(tc) == 8 and len(xc) == 16
        assert tc[1] - tc[0] == pytest.approx(0.25)
        assert xc[1] - xc[0] == pytest.approx(0.25)

    def test_minimage_wraps_to_half_extent(self):
        g = Grid(1, 8, 8, T=1.0, L=1.0)
        m = g.minimage_axis(1)
        assert float(np.abs(m).max()) <= 0.5
        assert m[0] == 0.0

    def test_power_of_two_required(self):
        with pytest.raises(ValueError):
            Grid(1, 6, 8)
        with pytest.raises(ValueError):
            Grid(1, 8, 12)

    def test_weight_decays_from_origin(self):
        g = Grid(2, 8, 8, T=2.0, L=4.0)
        w = g.weight(1.0)
        assert w.max() == pytest.approx(1.0)
        # farthest wrap point sits at parabolic distance 1 + 2 + 2
        assert w.min() == pytest.approx(1.0 / 6.0)


def test_snorm_is_parabolic():
    time = snorm([np.array([4.0]), np.array([0.0]), np.array([0.0])])
    space = snorm([np.array([0.0]), np.array([4.0]), np.array([0.0])])
    assert time[0] == pytest.approx(2.0)
    assert space[0] == pytest.approx(4.0)


class TestNoiseSampling:
    def test_laws_registered(self):
        assert set(NOISE_LAWS) == {"gaussian-white", "uniform-white"}

    def test_unknown_law_rejected(self, grid2):
        with pytest.raises(ValueError):
            sample_noise(grid2, "poisson", 0, 0)

    def test_deterministic_in_seed_and_stream(self, grid2):
        a = sample_noise(grid2, "gaussian-white", 7, 3)
        b = sample_noise(grid2, "gaussian-white", 7, 3)
        c = sample_noise(grid2, "gaussian-white", 7, 4)
        d = sample_noise(grid2, "gaussian-white", 8, 3)
        assert np.array_equal(a.values, b.values)
        assert not np.array_equal(a.values, c.values)
        assert not np.array_equal(a.values, d.values)

    def test_white_variance_scales_with_cell(self):
        g = Grid(2, 16, 16)
        f = sample_noise(g, "gaussian-white", 5, 0)
        # sample variance of N(0, 1/cell_volume), 4096 cells
        assert float(f.values.var() * g.cell_volume) == pytest.approx(1.0, rel=0.1)

    def test_uniform_law_bounded(self):
        g = Grid(2, 8, 8)
        f = sample_noise(g, "uniform-white", 5, 0)
        bound = (3.0 / g.cell_volume) ** 0.5
        assert float(np.abs(f.values).max()) <= bound
        assert float(f.values.var() * g.cell_volume) == pytest.approx(1.0, rel=0.15)


class TestFieldIO:
    def test_round_trip(self, tmp_path, grid2):
        f = sample_noise(grid2, "gaussian-white", 2, 9)
        path = tmp_path / "field.bin"
        write_field(path, f)
        back = read_field(path)
        assert back.grid.shape == grid2.shape
        assert back.grid.extents == grid2.extents
        assert np.array_equal(back.values, f.values)

    def test_corrupt_header_rejected(self, tmp_path, grid2):
        f = sample_noise(grid2, "gaussian-white", 2, 9)
        path = tmp_path / "field.bin"
        write_field(path, f)
        raw = bytearray(path.read_bytes())
        raw[0] ^= 0xFF
        path.write_bytes(bytes(raw))
        with pytest.raises(ValueError):
            read_field(path)

    def test_field_shape_validated(self, grid2):
        with pytest.raises(ValueError):
            GridField(grid2, np.zeros((4, 4)))
