import json

import numpy as np

from tracksentry.geometry import Pose

CUBE_VERTS = np.array([[x, y, z] for x in (0.0, 1.0)
                       for y in (0.0, 1.0) for z in (0.0, 1.0)])


def random_pose(rng):
    from scipy.spatial.transform import Rotation
    R = Rotation.random(random_state=np.random.RandomState(rng.integers(2**31))).as_matrix()
    t = rng.normal(size=3)
    return Pose(R, t)


def write_xyz(path, pts):
    with open(path, "w") as f:
        for p in pts:
            f.write(f"{p[0]} {p[1]} {p[2]}\n")
    return str(path)


def make_scene(tmp_path, model_path, model, duration=2.0, fps=10.0,
               events=(), position=(0.0, 0.0, 0.8), seed=0,
               intr=None, name="scene"):
    """Build and write a static-pose scene with optional events."""
    from tracksentry.simulator import SceneScript, generate, write_scene
    intr_d = intr or {"fx": 600.0, "fy": 600.0, "cx": 320.0, "cy": 240.0,
                      "width": 640, "height": 480}
    script = SceneScript.from_dict({
        "model": model_path,
        "intrinsics": intr_d,
        "fps": fps,
        "duration": duration,
        "trajectory": [{"time": 0.0, "position": list(position),
                        "rotvec": [0.0, 0.0, 0.0]}],
        "events": [dict(e) for e in events],
    })
    frames = generate(script, seed, model)
    out = tmp_path / name
    write_scene(frames, script, out)
    return str(out), script, frames


def write_config(path, model_path, scene_dir, out_dir, **overrides):
    cfg = {"model": model_path, "scene": scene_dir, "out": str(out_dir)}
    cfg.update(overrides)
    with open(path, "w") as f:
        json.dump(cfg, f)
    return str(path)
