"""Multi-camera 3D tracking with occlusion-aware appearance embeddings.

Thin Python layer over the native core. Geometry objects are plain classes;
reports come back as dictionaries mirroring the JSON files the CLI writes.
"""

from ._core import (
    CameraModel,
    Error,
    ObjectState3D,
    __version__,
    box_corners,
    dispatch,
    evaluate_hota,
    fuse_embedding,
    generate_keypoints,
    gradient_checks,
    iou3d,
    msda,
    project_point,
    reid_evaluate,
    visible_fraction,
)

__all__ = [
    "CameraModel",
    "Error",
    "ObjectState3D",
    "__version__",
    "box_corners",
    "dispatch",
    "evaluate_hota",
    "fuse_embedding",
    "generate_keypoints",
    "gradient_checks",
    "iou3d",
    "msda",
    "project_point",
    "reid_evaluate",
    "visible_fraction",
]


def main(argv=None):
    """Console entry point mirroring the native executable."""
    import sys

    code, out, err = dispatch(list(sys.argv[1:] if argv is None else argv))
    sys.stdout.write(out)
    sys.stderr.write(err)
    return code
