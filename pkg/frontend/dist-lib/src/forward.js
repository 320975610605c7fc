/**
 * Touch synthesis from the gateway's served forward-model constants.
 *
 * The gateway samples its dipole forward model on a position/pressure
 * lattice; the pad interpolates that grid trilinearly, so touches here
 * produce the same zeroed 24-channel readings the robot-side skin
 * would, without duplicating the physics in the browser.
 */
const CENTI_UT_LIMIT = 32767;
export class ResponseGrid {
    nx;
    ny;
    pressures;
    values;
    width;
    height;
    constructor(grid, footprint) {
        this.nx = grid.nx;
        this.ny = grid.ny;
        this.pressures = grid.pressures;
        this.values = Float64Array.from(grid.values);
        [this.width, this.height] = footprint;
        const expect = grid.pressures.length * grid.nx * grid.ny * 24;
        if (this.values.length !== expect) {
            throw new Error(`response grid has ${this.values.length} values, expected ${expect}`);
        }
    }
    at(pi, xi, yi, ch) {
        return this.values[((pi * this.nx + xi) * this.ny + yi) * 24 + ch];
    }
    /** Zeroed 24-channel reading (µT) for a touch at (x, y) mm. */
    zeroedAt(xMm, yMm, pressure) {
        const out = new Float64Array(24);
        if (pressure <= 0)
            return out;
        const p = Math.min(pressure, 1);
        // pressure bracket (grid starts above 0; below it, scale linearly)
        let pHi = this.pressures.length - 1;
        while (pHi > 0 && this.pressures[pHi - 1] >= p)
            pHi--;
        const pLo = Math.max(0, pHi - 1);
        let tP;
        let scaleLow = 1;
        if (p <= this.pressures[0]) {
            tP = 0;
            scaleLow = p / this.pressures[0];
            pHi = 0;
        }
        else {
            tP = (p - this.pressures[pLo]) / (this.pressures[pHi] - this.pressures[pLo]);
        }
        const fx = Math.min(Math.max((xMm / this.width) * (this.nx - 1), 0), this.nx - 1);
        const fy = Math.min(Math.max((yMm / this.height) * (this.ny - 1), 0), this.ny - 1);
        const x0 = Math.floor(fx), y0 = Math.floor(fy);
        const x1 = Math.min(x0 + 1, this.nx - 1), y1 = Math.min(y0 + 1, this.ny - 1);
        const tx = fx - x0, ty = fy - y0;
        for (let ch = 0; ch < 24; ch++) {
            const plane = (pi) => {
                const v00 = this.at(pi, x0, y0, ch);
                const v10 = this.at(pi, x1, y0, ch);
                const v01 = this.at(pi, x0, y1, ch);
                const v11 = this.at(pi, x1, y1, ch);
                return (v00 * (1 - tx) + v10 * tx) * (1 - ty) + (v01 * (1 - tx) + v11 * tx) * ty;
            };
            out[ch] = pHi === 0 && tP === 0
                ? plane(0) * scaleLow
                : plane(pLo) * (1 - tP) + plane(pHi) * tP;
        }
        return out;
    }
}
/** Quantize zeroed µT into the i16 centi-µT wire field. */
export function toSensorFrame(seq, zeroedUt) {
    const values = new Int16Array(24);
    for (let i = 0; i < 24; i++) {
        const centi = Math.round(zeroedUt[i] * 100);
        values[i] = Math.max(-CENTI_UT_LIMIT, Math.min(CENTI_UT_LIMIT, centi));
    }
    return { kind: "sensor_frame", seq, values };
}
/** Per-sensor-region |ΔB| magnitudes from 24 zeroed channels. */
export function regionMagnitudes(zeroedUt, scale = 1) {
    const mags = [];
    for (let r = 0; r < 8; r++) {
        const x = zeroedUt[3 * r] * scale;
        const y = zeroedUt[3 * r + 1] * scale;
        const z = zeroedUt[3 * r + 2] * scale;
        mags.push(Math.sqrt(x * x + y * y + z * z));
    }
    return mags;
}
