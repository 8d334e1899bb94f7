// Client-side QR rendering of canonical entity URLs: the service stays
// free of image generation, the code is computed in the browser.

import QRCode from "qrcode";

export async function qrSvg(text: string): Promise<string> {
  return QRCode.toString(text, { type: "svg", errorCorrectionLevel: "M", margin: 1 });
}

export async function renderQrInto(container: HTMLElement, text: string): Promise<void> {
  container.innerHTML = await qrSvg(text);
  container.setAttribute("data-qr-content", text);
  const svg = container.querySelector("svg");
  if (svg) {
    svg.setAttribute("width", "140");
    svg.setAttribute("height", "140");
    svg.setAttribute("role", "img");
    svg.setAttribute("aria-label", `QR code for ${text}`);
  }
}
