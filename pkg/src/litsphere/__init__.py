"""Reflectance-map synthesis, inversion, and benchmarking for sphere probes
under natural HDR illumination."""

from .errors import (
    ContractError,
    FileFormatError,
    LitsphereError,
    NonFiniteError,
    PfmHeaderError,
    PfmTruncatedError,
)
from .spherical import (
    Direction,
    EnvironmentMap,
    SolidAngleTable,
    direction_to_latlong,
    latlong_grid,
    latlong_to_direction,
    load_pfm,
    resample_envmap,
    save_pfm,
    solid_angle_table,
    texel_solid_angle,
)
from .render import (
    PhongMaterial,
    ReflectanceMap,
    ViewPose,
    point_light_env,
    reflect,
    render_diffuse_rm,
    render_reflectance_map,
    render_specular_levels,
    render_specular_rm,
    sphere_normal,
    sphere_normal_grid,
)
from .exposure import (
    ExposureParams,
    choose_exposure,
    log_decode,
    log_encode,
    simulate_ldr,
    tonemap_8bit,
)
from .fit import (
    BasisRMs,
    GlossGrid,
    fit_phong,
    load_basis,
    precompute_basis,
    save_basis,
    solve_kd_ks,
)
from .upsample import (
    GuideImage,
    build_guide,
    joint_bilateral_upsample,
)
from .metrics import (
    MetricPair,
    dssim,
    mse_log,
    ms_ssim,
)
from .dataset import (
    GenConfig,
    SampleRecord,
    generate,
    load_manifest,
    sample_material,
    sample_view,
)
from .bench import (
    MIRROR_MATERIAL,
    TASKS,
    AuxCorpora,
    BenchConfig,
    BenchReport,
    Decomposition,
    SampleData,
    TaskStats,
    ground_truth_provider,
    load_sample_data,
    make_external_provider,
    make_greedy_provider,
    run_benchmark,
    run_task,
    upgrade_env,
    write_report,
)

__version__ = "0.1.0"
