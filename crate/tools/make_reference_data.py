#!/usr/bin/env python3
"""Regenerates the plain-text reference data shipped in crates/clearsky/data.

Requires numpy and colour-science (for the CIE tables). Run from the
repository root:

    python3 tools/make_reference_data.py

The Hosek-Wilkie coefficients are produced separately by
tools/convert_hosek_dataset.py.
"""

import math
import os

import numpy as np

OUT = os.path.join(os.path.dirname(__file__), "..", "crates", "clearsky", "data")


def write(name, header, rows, fmt):
    path = os.path.join(OUT, name)
    with open(path, "w", encoding="utf-8") as f:
        for line in header:
            f.write("# " + line + "\n" if line else "#\n")
        for row in rows:
            f.write(fmt.format(*row) + "\n")
    print("wrote", path)


def cie_tables():
    import colour
    import colour.colorimetry.datasets.illuminants as il

    cmfs = colour.MSDS_CMFS["CIE 1931 2 Degree Standard Observer"]
    rows = []
    for wl in range(360, 831, 5):
        x, y, z = cmfs[wl]
        rows.append((wl, x, y, z))
    write(
        "cie1931_2deg_5nm.txt",
        [
            "CIE 1931 2-degree standard observer colour matching functions.",
            "Columns: wavelength (nm), xbar, ybar, zbar. 5 nm steps, 360-830 nm.",
        ],
        rows,
        "{:d} {:.7e} {:.7e} {:.7e}",
    )

    basis = il.SDS_BASIS_FUNCTIONS_CIE_ILLUMINANT_D_SERIES
    rows = []
    for wl in range(300, 831, 10):
        rows.append((wl, basis["S0"][wl], basis["S1"][wl], basis["S2"][wl]))
    write(
        "cie_daylight_basis_10nm.txt",
        [
            "CIE daylight components S0, S1, S2 (relative units).",
            "Columns: wavelength (nm), S0, S1, S2. 10 nm steps, 300-830 nm.",
        ],
        rows,
        "{:d} {:.4f} {:.4f} {:.4f}",
    )


# Extraterrestrial solar spectral irradiance (ASTM E-490 AM0), 10 nm samples.
SOLAR_360_830 = [
    1.11776, 1.14259, 1.01249, 1.14716, 1.72765, 1.73054, 1.6887, 1.61253,
    1.91198, 2.03474, 2.02042, 2.02212, 1.93377, 1.95809, 1.91686, 1.8298,
    1.8685, 1.8931, 1.85149, 1.8504, 1.8341, 1.8345, 1.8147, 1.78158, 1.7533,
    1.6965, 1.68194, 1.64654, 1.6048, 1.52143, 1.55622, 1.5113, 1.474, 1.4482,
    1.41018, 1.36775, 1.34188, 1.31429, 1.28303, 1.26758, 1.2367, 1.2082,
    1.18737, 1.14683, 1.12362, 1.1058, 1.07124, 1.04992,
]


def solar():
    rows = [(360 + 10 * i, v) for i, v in enumerate(SOLAR_360_830)]
    write(
        "solar_irradiance_am0.txt",
        [
            "Extraterrestrial solar spectral irradiance, ASTM E-490 AM0, 10 nm samples.",
            "Columns: wavelength (nm), irradiance (W m^-2 nm^-1).",
        ],
        rows,
        "{:d} {:.5f}",
    )


# Spectral albedo of a green grass canopy (10 nm samples). Low in the blue,
# chlorophyll reflectance bump around 550 nm, absorption trough near 670 nm
# and the red edge above 700 nm.
GRASS = {
    360: 0.026, 370: 0.027, 380: 0.028, 390: 0.029, 400: 0.030, 410: 0.031,
    420: 0.032, 430: 0.033, 440: 0.034, 450: 0.035, 460: 0.036, 470: 0.037,
    480: 0.039, 490: 0.042, 500: 0.048, 510: 0.060, 520: 0.075, 530: 0.088,
    540: 0.096, 550: 0.100, 560: 0.098, 570: 0.092, 580: 0.084, 590: 0.077,
    600: 0.071, 610: 0.066, 620: 0.062, 630: 0.058, 640: 0.054, 650: 0.050,
    660: 0.046, 670: 0.045, 680: 0.050, 690: 0.075, 700: 0.130, 710: 0.210,
    720: 0.290, 730: 0.360, 740: 0.410, 750: 0.440, 760: 0.455, 770: 0.462,
    780: 0.466, 790: 0.468, 800: 0.470, 810: 0.471, 820: 0.472, 830: 0.472,
}


def grass():
    rows = sorted(GRASS.items())
    write(
        "grass_albedo.txt",
        [
            "Lambertian spectral albedo of a grass-covered ground, 10 nm samples.",
            "Columns: wavelength (nm), albedo (dimensionless).",
        ],
        rows,
        "{:d} {:.3f}",
    )


def penndorf_beta(wavelength_nm):
    # Must stay identical to atmosphere::rayleigh_beta in clearsky-core.
    lam_um = wavelength_nm * 1e-3
    sigma2 = 1.0 / (lam_um * lam_um)
    n_minus_1 = (6432.8 + 2949810.0 / (146.0 - sigma2) + 25540.0 / (41.0 - sigma2)) * 1e-8
    n = 1.0 + n_minus_1
    number_density = 2.547e25
    depolarization = 0.035
    lam_m = wavelength_nm * 1e-9
    king = (6.0 + 3.0 * depolarization) / (6.0 - 7.0 * depolarization)
    return 8.0 * math.pi ** 3 * (n * n - 1.0) ** 2 / (3.0 * number_density * lam_m ** 4) * king


def rayleigh():
    grid = np.linspace(360.0, 830.0, 40)
    rows = [(wl, penndorf_beta(wl)) for wl in grid]
    write(
        "rayleigh_penndorf.txt",
        [
            "Sea-level Rayleigh scattering coefficient of dry air at 15 C, 1013.25 hPa.",
            "Refractive index dispersion and depolarisation factor 0.035 (Penndorf 1957).",
            "Columns: wavelength (nm), scattering coefficient (m^-1).",
        ],
        rows,
        "{:.6f} {:.8e}",
    )


def sun_position(doy, hour_local, tz, lat, lon):
    gamma = 2.0 * math.pi / 365.0 * (doy - 1 + (hour_local - tz - 12.0) / 24.0)
    eqtime = 229.18 * (
        0.000075
        + 0.001868 * math.cos(gamma)
        - 0.032077 * math.sin(gamma)
        - 0.014615 * math.cos(2 * gamma)
        - 0.040849 * math.sin(2 * gamma)
    )
    decl = (
        0.006918
        - 0.399912 * math.cos(gamma)
        + 0.070257 * math.sin(gamma)
        - 0.006758 * math.cos(2 * gamma)
        + 0.000907 * math.sin(2 * gamma)
        - 0.002697 * math.cos(3 * gamma)
        + 0.00148 * math.sin(3 * gamma)
    )
    time_offset = eqtime + 4.0 * lon - 60.0 * tz
    tst = hour_local * 60.0 + time_offset
    ha = math.radians(tst / 4.0 - 180.0)
    phi = math.radians(lat)
    cos_zen = math.sin(phi) * math.sin(decl) + math.cos(phi) * math.cos(decl) * math.cos(ha)
    zen = math.acos(max(-1.0, min(1.0, cos_zen)))
    sin_zen = math.sin(zen)
    cos_az = (math.sin(decl) - math.sin(phi) * cos_zen) / (math.cos(phi) * sin_zen)
    az = math.degrees(math.acos(max(-1.0, min(1.0, cos_az))))
    if ha > 0:
        az = 360.0 - az
    return math.degrees(zen), az


def ephemeris():
    # Ithaca, NY, 2013-05-12 (day of year 132), Eastern Daylight Time.
    lat, lon, tz, doy = 42.447, -76.483, -4.0, 132
    labels = ["06h00", "07h00", "08h00"]
    for minutes in range(9 * 60 + 30, 13 * 60 + 31, 15):
        labels.append("{:02d}h{:02d}".format(minutes // 60, minutes % 60))
    rows = []
    for label in labels:
        hour = int(label[:2]) + int(label[3:]) / 60.0
        zen, az = sun_position(doy, hour, tz, lat, lon)
        rows.append((label, zen, az))
    write(
        "ephemeris_ithaca_2013-05-12.txt",
        [
            "Sun positions for Ithaca, NY (42.447 N, 76.483 W) on 2013-05-12, local EDT.",
            "Columns: time label, sun zenith angle (deg), sun azimuth (deg, clockwise from north).",
        ],
        rows,
        "{} {:.4f} {:.4f}",
    )


if __name__ == "__main__":
    os.makedirs(OUT, exist_ok=True)
    cie_tables()
    solar()
    grass()
    rayleigh()
    ephemeris()
