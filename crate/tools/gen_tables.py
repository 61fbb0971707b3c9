#!/usr/bin/env python3
"""Generate the optical lookup tables shipped in crates/shallows/data/.

Run from the repository root:  python3 tools/gen_tables.py
"""
import math
import os

OUT = os.path.join(os.path.dirname(__file__), "..", "crates", "shallows", "data")

# ---------------------------------------------------------------------------
# Pure-water absorption, after Pope & Fry (1997), Appl. Opt. 36, 8710
# (integrating-cavity measurements, 380-727.5 nm) with the long-wave tail
# after Smith & Baker (1981).  Knots at 5 nm; linearly interpolated to 1 nm.
# Units: 1/m.
AW_KNOTS = [
    (400, 0.00663), (405, 0.00530), (410, 0.00473), (415, 0.00444),
    (420, 0.00454), (425, 0.00478), (430, 0.00495), (435, 0.00530),
    (440, 0.00635), (445, 0.00751), (450, 0.00922), (455, 0.00962),
    (460, 0.00979), (465, 0.01011), (470, 0.01060), (475, 0.01140),
    (480, 0.01270), (485, 0.01360), (490, 0.01500), (495, 0.01730),
    (500, 0.02040), (505, 0.02560), (510, 0.03250), (515, 0.03960),
    (520, 0.04090), (525, 0.04170), (530, 0.04340), (535, 0.04520),
    (540, 0.04740), (545, 0.05110), (550, 0.05650), (555, 0.05960),
    (560, 0.06190), (565, 0.06420), (570, 0.06950), (575, 0.07720),
    (580, 0.08960), (585, 0.11000), (590, 0.13510), (595, 0.16720),
    (600, 0.22240), (605, 0.25770), (610, 0.26440), (615, 0.26780),
    (620, 0.27550), (625, 0.28340), (630, 0.29160), (635, 0.30120),
    (640, 0.31080), (645, 0.32500), (650, 0.34000), (655, 0.37100),
    (660, 0.41000), (665, 0.42900), (670, 0.43900), (675, 0.44800),
    (680, 0.46500), (685, 0.48600), (690, 0.51600), (695, 0.55900),
    (700, 0.62400), (705, 0.70400), (710, 0.82700), (715, 1.00700),
    (720, 1.23100), (725, 1.48900), (730, 1.79900), (735, 2.03800),
    (740, 2.38000), (745, 2.44200), (750, 2.47000),
]


def interp(knots, lam):
    for (l0, v0), (l1, v1) in zip(knots, knots[1:]):
        if l0 <= lam <= l1:
            t = (lam - l0) / (l1 - l0)
            return v0 + t * (v1 - v0)
    raise ValueError(lam)


def write_curve(name, header_lines, rows):
    path = os.path.join(OUT, name)
    with open(path, "w") as f:
        for line in header_lines:
            f.write(f"# {line}\n")
        for lam, val in rows:
            f.write(f"{lam:.1f} {val:.6g}\n")
    print("wrote", path, f"({len(rows)} rows)")


def main():
    os.makedirs(OUT, exist_ok=True)
    os.makedirs(os.path.join(OUT, "bottoms"), exist_ok=True)

    # a_w at 1 nm
    rows = [(lam, interp(AW_KNOTS, lam)) for lam in range(400, 751)]
    write_curve(
        "a_w.txt",
        [
            "Pure-water absorption coefficient a_w(lambda), units 1/m.",
            "After Pope & Fry (1997), Appl. Opt. 36(33), integrating-cavity",
            "measurements; long-wave tail after Smith & Baker (1981).",
            "Tabulated at 5 nm and linearly resampled to 1 nm, 400-750 nm.",
            "columns: wavelength_nm value",
        ],
        rows,
    )

    # b_bw at 1 nm: backscattering of pure seawater, half the total
    # scattering of Morel (1974): b_bw(lambda) = 0.0038 (400/lambda)^4.32
    rows = [(lam, 0.0038 * (400.0 / lam) ** 4.32) for lam in range(400, 751)]
    write_curve(
        "b_bw.txt",
        [
            "Backscattering coefficient of pure seawater b_bw(lambda), units 1/m.",
            "Closed form b_bw = 0.0038 (400/lambda)^4.32 after Morel (1974),",
            "evaluated at 1 nm, 400-750 nm.",
            "columns: wavelength_nm value",
        ],
        rows,
    )

    # Representative bottom albedo spectra, dimensionless, ~normalised to
    # 550 nm (the loader renormalises exactly).  Smooth plausible shapes:
    # bright carbonate sand, green seagrass canopy, brownish coral/algal
    # pavement.  Knots at irregular wavelengths, written at 5 nm.
    sand = [
        (400, 0.580), (420, 0.640), (440, 0.700), (460, 0.760), (480, 0.820),
        (500, 0.880), (520, 0.935), (540, 0.980), (550, 1.000), (560, 1.020),
        (580, 1.055), (600, 1.085), (620, 1.110), (640, 1.130), (660, 1.150),
        (680, 1.165), (700, 1.180), (720, 1.195), (750, 1.215),
    ]
    seagrass = [
        (400, 0.500), (420, 0.440), (440, 0.420), (460, 0.470), (480, 0.560),
        (500, 0.700), (520, 0.880), (540, 0.975), (550, 1.000), (560, 0.990),
        (580, 0.910), (600, 0.800), (620, 0.710), (640, 0.620), (660, 0.520),
        (680, 0.470), (700, 0.900), (720, 2.100), (750, 3.100),
    ]
    coral = [
        (400, 0.540), (420, 0.570), (440, 0.610), (460, 0.660), (480, 0.730),
        (500, 0.810), (520, 0.900), (540, 0.970), (550, 1.000), (560, 1.025),
        (580, 1.050), (600, 1.040), (620, 1.020), (640, 0.990), (660, 0.950),
        (680, 0.905), (700, 1.010), (720, 1.130), (750, 1.260),
    ]
    for name, knots in [("sand", sand), ("seagrass", seagrass), ("coral", coral)]:
        rows = [(lam, interp(knots, lam)) for lam in range(400, 751, 5)]
        write_curve(
            os.path.join("bottoms", f"{name}.txt"),
            [
                f"Representative {name} bottom albedo spectrum, dimensionless,",
                "normalised to 1 at 550 nm. Approximate shape for use when no",
                "site-specific field spectra are available.",
                "columns: wavelength_nm value",
            ],
            rows,
        )


if __name__ == "__main__":
    main()
