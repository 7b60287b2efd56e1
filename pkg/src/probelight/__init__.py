"""probelight: HDR light estimation by iterative chrome-ball inpainting."""

__version__ = "0.1.0"

from .images import (
    ColorSpace,
    PixelMask,
    RasterImage,
    decode_pfm,
    decode_png,
    encode_pfm,
    encode_png,
    load_image,
    save_image,
)
from .radiometry import (
    ToneMapParams,
    apply_tonemap,
    linearize,
    luminance,
    merge_brackets,
    tonemap,
    tonemap_scale,
)
from .geometry import (
    BallSpec,
    CameraCrop,
    EnvironmentMap,
    Material,
    ball_to_envmap,
    crop_perspective,
    dir_to_uv,
    envmap_to_ball,
    render_sphere,
    uv_to_dir,
)
from .aggregation import ball_mask, composite, paint_depth_circle, pixelwise_median
from .backend import (
    Corruption,
    HttpBackend,
    InpaintRequest,
    InpaintResponse,
    MockBackend,
    MockConfig,
    check_health,
    send_inpaint,
    start_mock_server,
)
from .orchestrator import ProbeConfig, iterative_inpaint, probe, prompt_weight
from .metrics import (
    EvalReport,
    angular_error,
    evaluate_sphere_array,
    evaluate_three_spheres,
    normalized_rmse,
    sample_random_camera,
    si_rmse,
)

__all__ = [
    "ColorSpace",
    "PixelMask",
    "RasterImage",
    "decode_pfm",
    "decode_png",
    "encode_pfm",
    "encode_png",
    "load_image",
    "save_image",
    "ToneMapParams",
    "apply_tonemap",
    "linearize",
    "luminance",
    "merge_brackets",
    "tonemap",
    "tonemap_scale",
    "BallSpec",
    "CameraCrop",
    "EnvironmentMap",
    "Material",
    "ball_to_envmap",
    "crop_perspective",
    "dir_to_uv",
    "envmap_to_ball",
    "render_sphere",
    "uv_to_dir",
    "ball_mask",
    "composite",
    "paint_depth_circle",
    "pixelwise_median",
    "Corruption",
    "HttpBackend",
    "InpaintRequest",
    "InpaintResponse",
    "MockBackend",
    "MockConfig",
    "check_health",
    "send_inpaint",
    "start_mock_server",
    "ProbeConfig",
    "iterative_inpaint",
    "probe",
    "prompt_weight",
    "EvalReport",
    "angular_error",
    "evaluate_sphere_array",
    "evaluate_three_spheres",
    "normalized_rmse",
    "sample_random_camera",
    "si_rmse",
]
