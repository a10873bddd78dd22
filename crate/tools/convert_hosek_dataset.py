#!/usr/bin/env python3
"""Converts the Hosek-Wilkie spectral skylight coefficients to the plain-text
layout read by clearsky (crates/clearsky/data/hosek_wilkie_spectral.txt).

The input is any tensor file holding the fields `sky_params_spec`
(turbidity, albedo, control point, channel, parameter) and `sky_rad_spec`
(turbidity, albedo, control point, channel), e.g. the `sunsky_datasets.bin`
distributed with Mitsuba 3 under data/sunsky/. The output reproduces the
ordering of the original ArHosekSkyModelData_Spectral.h tables: one block per
channel, albedo-major, then turbidity 1..10, then 6 control points.

    python3 tools/convert_hosek_dataset.py path/to/sunsky_datasets.bin
"""

import os
import struct
import sys

import numpy as np

OUT = os.path.join(
    os.path.dirname(__file__), "..", "crates", "clearsky", "data", "hosek_wilkie_spectral.txt"
)

LICENSE = """Copyright (c) 2012 - 2013, Lukas Hosek and Alexander Wilkie
All rights reserved.

Redistribution and use in source and binary forms, with or without
modification, are permitted provided that the following conditions are met:

    * Redistributions of source code must retain the above copyright
      notice, this list of conditions and the following disclaimer.
    * Redistributions in binary form must reproduce the above copyright
      notice, this list of conditions and the following disclaimer in the
      documentation and/or other materials provided with the distribution.
    * None of the names of the contributors may be used to endorse or promote
      products derived from this software without specific prior written
      permission.

THIS SOFTWARE IS PROVIDED BY THE COPYRIGHT HOLDERS AND CONTRIBUTORS "AS IS" AND
ANY EXPRESS OR IMPLIED WARRANTIES, INCLUDING, BUT NOT LIMITED TO, THE IMPLIED
WARRANTIES OF MERCHANTABILITY AND FITNESS FOR A PARTICULAR PURPOSE ARE
DISCLAIMED. IN NO EVENT SHALL THE COPYRIGHT HOLDERS BE LIABLE FOR ANY
DIRECT, INDIRECT, INCIDENTAL, SPECIAL, EXEMPLARY, OR CONSEQUENTIAL DAMAGES
(INCLUDING, BUT NOT LIMITED TO, PROCUREMENT OF SUBSTITUTE GOODS OR SERVICES;
LOSS OF USE, DATA, OR PROFITS; OR BUSINESS INTERRUPTION) HOWEVER CAUSED AND
ON ANY THEORY OF LIABILITY, WHETHER IN CONTRACT, STRICT LIABILITY, OR TORT
(INCLUDING NEGLIGENCE OR OTHERWISE) ARISING IN ANY WAY OUT OF THE USE OF THIS
SOFTWARE, EVEN IF ADVISED OF THE POSSIBILITY OF SUCH DAMAGE."""


def read_tensor_file(path):
    data = open(path, "rb").read()
    if data[:12] != b"tensor_file\x00":
        raise SystemExit("not a tensor file: " + path)
    pos = 14
    (count,) = struct.unpack_from("<I", data, pos)
    pos += 4
    fields = {}
    for _ in range(count):
        (name_len,) = struct.unpack_from("<H", data, pos)
        pos += 2
        name = data[pos : pos + name_len].decode()
        pos += name_len
        (ndim,) = struct.unpack_from("<H", data, pos)
        pos += 2
        dtype = data[pos]
        pos += 1
        (offset,) = struct.unpack_from("<Q", data, pos)
        pos += 8
        shape = struct.unpack_from("<%dQ" % ndim, data, pos)
        pos += 8 * ndim
        if dtype != 11:
            continue
        values = np.frombuffer(data, dtype="<f8", count=int(np.prod(shape)), offset=offset)
        fields[name] = values.reshape(shape)
    return fields


def main():
    if len(sys.argv) != 2:
        raise SystemExit(__doc__)
    fields = read_tensor_file(sys.argv[1])
    params = fields["sky_params_spec"]  # (turbidity, albedo, ctrl, channel, param)
    rads = fields["sky_rad_spec"]  # (turbidity, albedo, ctrl, channel)
    wavelengths = [320 + 40 * i for i in range(11)]
    with open(OUT, "w", encoding="utf-8") as f:
        f.write("# Hosek-Wilkie spectral skylight model coefficients.\n#\n")
        for line in LICENSE.splitlines():
            f.write(("# " + line).rstrip() + "\n")
        f.write("#\n# Layout: per channel a `coefficients <nm>` block of 20 rows\n")
        f.write("# (albedo 0 then 1, turbidity 1..10) of 6 x 9 values, then a\n")
        f.write("# `radiance <nm>` block of 20 rows of 6 values.\n")
        f.write("channels " + " ".join(str(w) for w in wavelengths) + "\n")
        for c, wl in enumerate(wavelengths):
            f.write("coefficients {}\n".format(wl))
            for a in range(2):
                for t in range(10):
                    vals = params[t, a, :, c, :].reshape(-1)
                    f.write(" ".join("{:.6e}".format(v) for v in vals) + "\n")
            f.write("radiance {}\n".format(wl))
            for a in range(2):
                for t in range(10):
                    vals = rads[t, a, :, c]
                    f.write(" ".join("{:.6e}".format(v) for v in vals) + "\n")
    print("wrote", OUT)


if __name__ == "__main__":
    main()
