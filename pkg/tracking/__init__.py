"""
tracking/__init__.py

Sparse region-based 6-DoF pose tracking of known rigid objects.

Modules, bottom-up:
- geometry         - poses, pinhole camera, pose variation
- mesh_render      - OBJ meshes, CPU rasterizer, contours, occlusion masks
- viewpoint_model  - precomputed contour points for a sphere of views
- histograms       - foreground / background color statistics
- corrline         - correspondence lines and contour-distance distributions
- optimizer        - regularized Newton step from per-line distributions
- tracker          - per-frame orchestration for one or more objects
"""
