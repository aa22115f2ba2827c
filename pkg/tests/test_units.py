from dsaf.units import SCALE, from_units, to_units


def test_scale_round_trip_exact():
    for value in (0.0, 0.75, 2.0, 8.0, 74.8, 1000.0, 0.1):
        assert from_units(to_units(value)) == value


def test_testbed_capacity_quantizes_exactly():
    ghz_per_core = 74.8 / 28
    units = 3 * to_units(4 * ghz_per_core) + 2 * to_units(8 * ghz_per_core)
    assert units == 74_800_000
    assert from_units(units) == 74.8


def test_units_are_integers():
    assert SCALE == 1_000_000
    assert isinstance(to_units(1.234567), int)
    assert to_units(1.2345678) == 1_234_568  # round-half-even at the scale
