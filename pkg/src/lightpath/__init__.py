"""lightpath: simulate and reconstruct transparent surfaces from refracted light paths.

The package pairs a refractive ray-tracing simulator (scenes of implicit
solids observed by a pinhole camera against a coded reference pattern) with
a reconstruction pipeline that triangulates surface points and normals from
how immersion in a liquid alters the incident part of each light path.
"""

__version__ = "0.1.0"

from .geometry import (  # noqa: F401
    ContractViolation,
    Ray3,
    TriangulationResult,
    angle_between,
    check_medium_index,
    closest_points,
    critical_angle,
    reflect,
    refract,
    rodrigues_rotate,
    unit,
)
from .solids import (  # noqa: F401
    Cone,
    ConvexPolyhedron,
    Difference,
    Ellipsoid,
    HalfSpace,
    ImplicitSolid,
    InfiniteCylinder,
    Intersection,
    Sphere,
    Union,
    finite_cylinder,
    frustum,
)
from .scene import (  # noqa: F401
    AcquisitionScene,
    LiquidSurface,
    PatternPlane,
    PinholeCamera,
    camera_ray,
)
from .tracer import (  # noqa: F401
    CorrespondenceMap,
    LightPathTrace,
    SimulatedViews,
    add_correspondence_noise,
    first_entry_point,
    render_views,
    trace,
)
from .stripes import (  # noqa: F401
    StripeSweep,
    add_image_noise,
    stripe_profile,
    synthesize_stripe_stack,
)
from .decode import (  # noqa: F401
    NoSignalError,
    decode_axis,
    decode_stack,
    locate_peak,
)
from .reconstruct import (  # noqa: F401
    CorrespondenceRecord,
    DegenerateCorrespondenceError,
    NoRecordsError,
    QualityFlag,
    ReconPoints,
    RecordArrays,
    UnsupportedMediaError,
    reconstruct_surface,
    reconstruct_thin,
    record_arrays_from_maps,
    recover_normal,
    triangulate_fep,
)
from .heightfield import (  # noqa: F401
    EmptyMaskError,
    GradientGrid,
    NormalGrid,
    TriangleMesh,
    depth_alignment_offset,
    integrate,
    mesh_from_heightmap,
    normals_to_gradients,
)
from .scenes import (  # noqa: F401
    SCENE_NAMES,
    ConfigError,
    PaperScene,
    build_paper_scene,
    load_scene_config,
    scene_from_mapping,
)
from .evaluate import (  # noqa: F401
    CylinderReference,
    EllipsoidReference,
    ErrorSummary,
    FitError,
    FitResult,
    ImplicitReference,
    PlaneReference,
    PointCloudReference,
    SphereReference,
    normal_errors,
    position_errors,
    ransac_fit,
    run_sweep,
    sweep_to_csv,
)
from .io import (  # noqa: F401
    FormatError,
    read_correspondence_map,
    read_manifest,
    read_mesh_obj,
    read_pfm,
    read_pgm16,
    read_point_cloud_ply,
    write_correspondence_map,
    write_manifest,
    write_mesh_obj,
    write_pfm,
    write_pgm16,
    write_point_cloud_ply,
)
from .cli import main  # noqa: F401
