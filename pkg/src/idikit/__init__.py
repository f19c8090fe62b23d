"""idikit: turn scanned triangle meshes into interactive digital items.

Pipeline: import a mesh, segment it (manual plane cuts or spectral
clustering), attach physically simulated joints from a six-type taxonomy,
bind interface widgets and embedded content, persist the scene, and replay
interactions deterministically. A local HTTP/WebSocket service drives the
browser authoring UI.
"""

from .content import ContentBinding, ContentItem, ContentStore, bind_content
from .errors import IdiError
from .harness import EventScript, RunReport, run
from .mesh import CAP_MATERIAL_ID, MeshStats, TriMesh, compute_stats, export_mesh, import_mesh
from .physics import (
    JointSpec,
    JointType,
    SimState,
    TouchEvent,
    attach_joint,
    dof_violation,
    infer_joint_frame,
    initial_state,
    mass_properties,
    step,
)
from .scene import IdiScene, SceneSegment, SimConfig, load_scene, save_scene, validate_scene
from .slicer import CutPlane, Segment, SegmentSet, slice_by_plane, split_disconnected
from .spectral import (
    DualGraph,
    Segmentation,
    SpectralEmbedding,
    SpectralMeshSegmenter,
    build_dual_graph,
    segment_auto,
    segments_from_labels,
    select_k,
    spectral_embed,
)
from .widgets import (
    Effect,
    PlaybackState,
    WidgetEvent,
    WidgetSpec,
    attach_widget,
    dispatch_event,
    set_visibility,
    spawn_widget,
)

__version__ = "0.1.0"
