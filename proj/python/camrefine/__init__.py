# Copyright 2026 The camrefine Authors. All Rights Reserved.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Class activation maps with split-and-erase refinement."""

from camrefine._core import (
    Classifier,
    Error,
    activated_recall,
    class_map,
    compute_cam,
    conflict_temperature,
    default_thresholds,
    iterative_infer,
    load_map,
    load_model,
    mean_iou,
    pseudo_labels,
    read_image,
    read_labels,
    read_saliency,
    refine,
    split_multi,
    split_single,
    split_two,
    sweep_best_miou,
    total_loss,
    write_labels,
)

__version__ = "0.1.0"
