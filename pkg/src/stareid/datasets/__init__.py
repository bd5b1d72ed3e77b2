from stareid.datasets.tracklet import Tracklet
from stareid.datasets.tracklet import TrackletDataset
from stareid.datasets.tracklet import sample_frames
from stareid.datasets.tracklet import sample_frame_indices
from stareid.datasets.tracklet import evenly_spaced_indices
from stareid.datasets.tracklet import query_gallery_split
from stareid.datasets.sampler import pk_batch
from stareid.datasets.synthetic import SynthConfig
from stareid.datasets.synthetic import synth_generate
from stareid.datasets.synthetic import occlude
from stareid.datasets.loader import write_dataset
from stareid.datasets.loader import read_dataset
from stareid.datasets.loader import read_tracklet
