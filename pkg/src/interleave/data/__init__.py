from interleave.data._dataset import Split, Dataset, TaskData, TaskSpec
from interleave.data._delimited import split_sizes, load_delimited
from interleave.data._synthetic import GroundTruth, SyntheticFamilyConfig, ground_truth, gen_synthetic_family
