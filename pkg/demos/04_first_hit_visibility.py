"""
First-hit ray casting, drawn in ASCII
=====================================

One horizontal slice of a grid: a wall with a gap, and a camera in front.
Cells behind the wall stay unobserved; the gap lets rays through.
"""

import numpy as np

from occlabel import GridSpec, State, VoxelGrid, raycast_visibility

spec = GridSpec((0.0, 0.0, 0.0), 1.0, (24, 12, 1))
states = np.zeros(spec.dims, dtype=np.uint8)
states[10, :, 0] = State.OCCUPIED       # wall
states[10, 5:7, 0] = State.FREE         # doorway
states[18, 2:10, 0] = State.OCCUPIED    # far wall

out = raycast_visibility(VoxelGrid(spec, states), [[2.5, 6.0, 0.5]])

glyph = {State.FREE: ".", State.OCCUPIED: "#", State.UNOBSERVED: " "}
for j in reversed(range(spec.dims[1])):
    row = "".join(glyph[State(out.states[i, j, 0])] for i in range(spec.dims[0]))
    print("|" + row + "|")
print("camera at x=2.5, y=6.0;  # occupied  . free  (blank) unobserved")
print({s.name: out.count(s) for s in State})
