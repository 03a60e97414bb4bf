from gprsynth.io import ScanManifest, list_manifests, load_scan_image, read_manifest, write_bscan
from gprsynth.physics import ricker_wavelet, travel_time
from gprsynth.render import BScan, render_bscan, synthesize_response
from gprsynth.scene import Rebar, SceneSpec, preset_scene
