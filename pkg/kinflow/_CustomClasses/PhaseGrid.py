import numpy as np
import numpy.typing as npt

from .CustomExceptions import ShapeMismatch

# a density on the phase grid: one value per (spatial node, velocity node)
DensityField = npt.NDArray[np.float64]

# wall ids used by the boundary patches
WALL_BOTTOM = 0
WALL_TOP = 1
WALL_LEFT = 2
WALL_RIGHT = 3


class PhaseGrid:
    """
    Discretization of Omega x V: cell centres over the rectangle (0,lx) x (0,ly), a polar midpoint
    rule over the annulus v_min < |v| < v_max, one boundary patch per wall cell edge and a uniform
    set of scattering directions on the unit circle.

    Spatial index s = ix * ny + iy. Velocity index k = i_speed * n_angle + i_angle.
    Grids are never mutated after construction.
    """

    def __init__(self, nx: int, ny: int, n_speed: int, n_angle: int, n_e: int,
                 v_min: float, v_max: float, lx: float, ly: float):
        self.nx = int(nx)
        self.ny = int(ny)
        self.n_speed = int(n_speed)
        self.n_angle = int(n_angle)
        self.n_e = int(n_e)
        self.v_min = float(v_min)
        self.v_max = float(v_max)
        self.lx = float(lx)
        self.ly = float(ly)

        ############# SPACE #############
        self.dx = self.lx / self.nx
        self.dy = self.ly / self.ny
        self.cell_volume = self.dx * self.dy
        self.x_centers = (np.arange(self.nx) + 0.5) * self.dx
        self.y_centers = (np.arange(self.ny) + 0.5) * self.dy
        xx, yy = np.meshgrid(self.x_centers, self.y_centers, indexing="ij")
        self.space_points = np.column_stack([xx.ravel(), yy.ravel()])
        self.space_weights = np.full(self.nx * self.ny, self.cell_volume)

        ############# VELOCITY #############
        self.d_speed = (self.v_max - self.v_min) / self.n_speed
        self.d_angle = 2.0 * np.pi / self.n_angle
        self.speeds = self.v_min + (np.arange(self.n_speed) + 0.5) * self.d_speed
        self.angles = (np.arange(self.n_angle) + 0.5) * self.d_angle
        ss, aa = np.meshgrid(self.speeds, self.angles, indexing="ij")
        self.velocities = np.column_stack([(ss * np.cos(aa)).ravel(), (ss * np.sin(aa)).ravel()])
        # polar Jacobian |v|
        self.velocity_weights = (ss * self.d_speed * self.d_angle).ravel()

        self.weights = np.outer(self.space_weights, self.velocity_weights)

        ############# BOUNDARY #############
        points, normals, lengths, walls, cells = [], [], [], [], []
        for ix in range(self.nx):
            x = self.x_centers[ix]
            points += [(x, 0.0), (x, self.ly)]
            normals += [(0.0, -1.0), (0.0, 1.0)]
            lengths += [self.dx, self.dx]
            walls += [WALL_BOTTOM, WALL_TOP]
            cells += [ix * self.ny, ix * self.ny + self.ny - 1]
        for iy in range(self.ny):
            y = self.y_centers[iy]
            points += [(0.0, y), (self.lx, y)]
            normals += [(-1.0, 0.0), (1.0, 0.0)]
            lengths += [self.dy, self.dy]
            walls += [WALL_LEFT, WALL_RIGHT]
            cells += [iy, (self.nx - 1) * self.ny + iy]
        self.patch_points = np.array(points)
        self.patch_normals = np.array(normals)
        self.patch_lengths = np.array(lengths)
        self.patch_walls = np.array(walls, dtype=int)
        self.patch_cells = np.array(cells, dtype=int)

        ############# SCATTERING DIRECTIONS #############
        e_angles = (np.arange(self.n_e) + 0.5) * 2.0 * np.pi / self.n_e
        self.e_nodes = np.column_stack([np.cos(e_angles), np.sin(e_angles)])
        # normalized measure on the admissible half circle: n_e / 2 admissible nodes per pair
        self.e_weights = np.full(self.n_e, 2.0 / self.n_e)

    @property
    def n_space(self) -> int:
        return self.nx * self.ny

    @property
    def n_vel(self) -> int:
        return self.n_speed * self.n_angle

    @property
    def n_patch(self) -> int:
        return len(self.patch_lengths)

    @property
    def shape(self) -> tuple:
        return (self.n_space, self.n_vel)

    @property
    def area(self) -> float:
        return self.lx * self.ly

    @property
    def annulus_area(self) -> float:
        return np.pi * (self.v_max ** 2 - self.v_min ** 2)

    @property
    def perimeter(self) -> float:
        return 2.0 * (self.lx + self.ly)

    @property
    def min_cell_size(self) -> float:
        return min(self.dx, self.dy)

    def check_field(self, field, name: str = "field") -> DensityField:
        """raises ShapeMismatch unless field is a finite array shaped (n_space, n_vel)"""
        arr = np.asarray(field, dtype=float)
        if arr.shape != self.shape:
            raise ShapeMismatch(f"{name} has shape {arr.shape}, grid expects {self.shape}")
        if not np.all(np.isfinite(arr)):
            raise ShapeMismatch(f"{name} contains non-finite entries")
        return arr

    def velocity_node_of(self, v: np.ndarray) -> np.ndarray:
        """
        Index of the polar cell containing each velocity in v (shape (..., 2)); -1 outside the annulus
        """
        v = np.asarray(v, dtype=float)
        speed = np.hypot(v[..., 0], v[..., 1])
        angle = np.mod(np.arctan2(v[..., 1], v[..., 0]), 2.0 * np.pi)
        i_speed = np.floor((speed - self.v_min) / self.d_speed).astype(int)
        i_angle = np.floor(angle / self.d_angle).astype(int) % self.n_angle
        inside = (speed > self.v_min) & (speed < self.v_max)
        i_speed = np.clip(i_speed, 0, self.n_speed - 1)
        return np.where(inside, i_speed * self.n_angle + i_angle, -1)

    def to_dict(self) -> dict:
        return {
            "nx": self.nx, "ny": self.ny, "n_speed": self.n_speed, "n_angle": self.n_angle,
            "n_e": self.n_e, "v_min": self.v_min, "v_max": self.v_max, "lx": self.lx, "ly": self.ly,
        }


class DensityPath:
    """
    A density field stored at the lattice times 0, dt, ..., T; values has shape (n_times, n_space, n_vel)
    """

    def __init__(self, times, values):
        self.times = np.asarray(times, dtype=float)
        self.values = np.asarray(values, dtype=float)
        if self.times.ndim != 1 or len(self.times) == 0:
            raise ShapeMismatch("a density path needs at least one time stamp")
        if self.values.ndim != 3 or self.values.shape[0] != len(self.times):
            raise ShapeMismatch(f"path values of shape {self.values.shape} do not match {len(self.times)} times")
        if np.any(np.diff(self.times) <= 0.0):
            raise ShapeMismatch("path time stamps must be strictly increasing")

    @classmethod
    def constant(cls, field: DensityField, times) -> "DensityPath":
        times = np.asarray(times, dtype=float)
        return cls(times, np.repeat(np.asarray(field, dtype=float)[None, :, :], len(times), axis=0))

    @classmethod
    def zeros(cls, times, field_shape: tuple) -> "DensityPath":
        times = np.asarray(times, dtype=float)
        return cls(times, np.zeros((len(times),) + tuple(field_shape)))

    def __len__(self) -> int:
        return len(self.times)

    def __getitem__(self, k: int) -> DensityField:
        return self.values[k]

    def same_lattice(self, other: "DensityPath") -> bool:
        return self.values.shape == other.values.shape and np.array_equal(self.times, other.times)

    def _check_other(self, other: "DensityPath"):
        if not self.same_lattice(other):
            raise ShapeMismatch("density paths live on different time lattices")

    def __add__(self, other: "DensityPath") -> "DensityPath":
        self._check_other(other)
        return DensityPath(self.times, self.values + other.values)

    def __sub__(self, other: "DensityPath") -> "DensityPath":
        self._check_other(other)
        return DensityPath(self.times, self.values - other.values)

    def __mul__(self, alpha: float) -> "DensityPath":
        return DensityPath(self.times, alpha * self.values)

    __rmul__ = __mul__

    def copy(self) -> "DensityPath":
        return DensityPath(self.times.copy(), self.values.copy())
