"""Regenerates label_consistent.txt: the 2D boxes are the pixel extents of the
projected 3D box corners (camera-frame KITTI convention) under calib_kitti.txt."""
import numpy as np

P2 = np.array([7.215377e02, 0.0, 6.095593e02, 4.485728e01,
               0.0, 7.215377e02, 1.728540e02, 2.163791e-01,
               0.0, 0.0, 1.0, 2.745884e-03]).reshape(3, 4)

objects = [
    # category, trunc, occ, h, w, l, x, y, z, ry
    ("Car", 0.0, 0, 1.52, 1.63, 3.89, 2.50, 1.65, 15.00, -1.20),
    ("Pedestrian", 0.0, 1, 1.75, 0.60, 0.80, -3.00, 1.70, 9.00, 0.40),
    ("Car", 0.0, 0, 1.45, 1.70, 4.20, -6.50, 1.80, 28.00, 1.55),
]

lines = []
for cat, tr, oc, h, w, l, x, y, z, ry in objects:
    xc = np.array([l, l, -l, -l, l, l, -l, -l]) / 2
    yc = np.array([0, 0, 0, 0, -h, -h, -h, -h])
    zc = np.array([w, -w, -w, w, w, -w, -w, w]) / 2
    rot = np.array([[np.cos(ry), 0, np.sin(ry)], [0, 1, 0], [-np.sin(ry), 0, np.cos(ry)]])
    pts = rot @ np.vstack([xc, yc, zc]) + np.array([[x], [y], [z]])
    hom = P2 @ np.vstack([pts, np.ones(8)])
    uv = hom[:2] / hom[2]
    alpha = ry - np.arctan2(x, z)
    box = (uv[0].min(), uv[1].min(), uv[0].max(), uv[1].max())
    lines.append(f"{cat} {tr:.2f} {oc} {alpha:.2f} {box[0]:.2f} {box[1]:.2f} {box[2]:.2f} {box[3]:.2f} "
                 f"{h:.2f} {w:.2f} {l:.2f} {x:.2f} {y:.2f} {z:.2f} {ry:.2f}")
lines.append("DontCare -1 -1 -10 503.89 169.71 590.61 190.13 -1 -1 -1 -1000 -1000 -1000 -10")
with open("label_consistent.txt", "w") as f:
    f.write("\n".join(lines) + "\n")
