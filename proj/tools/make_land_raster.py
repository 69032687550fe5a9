#!/usr/bin/env python3
"""Rasterize a Natural Earth country shapefile into the 1-degree continent
code grid read by the earth dataset generator.

Usage: make_land_raster.py naturalearth_lowres.shp data/land_1deg.txt

Requires pyshp and shapely. Each cell is labelled by the continent covering
its center; Russia already carries the Europe label in the lowres dataset.
"""
import sys

import shapefile
from shapely.geometry import Point, shape
from shapely.prepared import prep

CODES = {
    "Africa": 1,
    "Asia": 2,
    "Europe": 3,
    "North America": 4,
    "South America": 5,
    "Oceania": 6,
    "Antarctica": 7,
}
RESOLUTION = 1


def fnv1a64(data: bytes) -> int:
    h = 0xCBF29CE484222325
    for b in data:
        h ^= b
        h = (h * 0x100000001B3) & 0xFFFFFFFFFFFFFFFF
    return h


def main(src, dst):
    reader = shapefile.Reader(src)
    fields = [f[0] for f in reader.fields[1:]]
    idx = fields.index("continent")
    polys = []
    for rec, shp in zip(reader.records(), reader.shapes()):
        code = CODES.get(rec[idx])
        if code is None:
            continue
        polys.append((code, prep(shape(shp.__geo_interface__))))

    rows = []
    n_lat = 180 // RESOLUTION
    n_lon = 360 // RESOLUTION
    for r in range(n_lat):
        lat = 90 - (r + 0.5) * RESOLUTION
        row = []
        for c in range(n_lon):
            lon = -180 + (c + 0.5) * RESOLUTION
            p = Point(lon, lat)
            code = 0
            for cc, poly in polys:
                if poly.contains(p):
                    code = cc
                    break
            row.append(str(code))
        rows.append("".join(row))

    body = "\n".join(rows)
    with open(dst, "w") as f:
        f.write("# geomae land raster v1\n")
        f.write("# source: Natural Earth 1:110m admin-0 countries (public domain)\n")
        f.write("# codes: 0 ocean, 1 africa, 2 asia, 3 europe+russia, 4 north america,"
                " 5 south america, 6 oceania, 7 antarctica\n")
        f.write(f"resolution {RESOLUTION}\n")
        f.write(f"checksum {fnv1a64(body.encode()):016x}\n")
        f.write(body + "\n")


if __name__ == "__main__":
    main(sys.argv[1], sys.argv[2])
